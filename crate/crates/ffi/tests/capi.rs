use std::ffi::{CStr, CString};
use std::ptr;

use matcha_ffi::*;

fn matrix(rows: usize, cols: usize, data: &[f32]) -> *mut MatchaMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { matcha_matrix_new(rows, cols, data.as_ptr(), true, &mut m) }, MatchaStatus::Ok);
    m
}

fn values(m: *const MatchaMatrix) -> Vec<f32> {
    let (mut r, mut c) = (0, 0);
    unsafe {
        assert_eq!(matcha_matrix_shape(m, &mut r, &mut c), MatchaStatus::Ok);
        let mut buf = vec![0.0; r * c];
        assert_eq!(matcha_matrix_copy_to(m, buf.as_mut_ptr(), buf.len()), MatchaStatus::Ok);
        buf
    }
}

fn last_error() -> String {
    let p = matcha_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn create_get_set_and_shape() {
    let m = matrix(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let mut v = 0.0;
    unsafe {
        assert_eq!(matcha_matrix_get(m, 1, 2, &mut v), MatchaStatus::Ok);
        assert_eq!(v, 6.0);
        assert_eq!(matcha_matrix_set(m, 0, 0, 9.0), MatchaStatus::Ok);
        assert_eq!(matcha_matrix_get(m, 2, 0, &mut v), MatchaStatus::Index);
        assert!(last_error().contains("out of range"));
        matcha_matrix_free(m);
    }
    assert_eq!(values(matrix(1, 1, &[3.5])), vec![3.5]);
}

#[test]
fn column_major_input_and_zeros() {
    let m = matrix(1, 1, &[0.0]);
    let mut cm = ptr::null_mut();
    let mut z = ptr::null_mut();
    unsafe {
        assert_eq!(matcha_matrix_new(2, 2, [1.0f32, 3.0, 2.0, 4.0].as_ptr(), false, &mut cm), MatchaStatus::Ok);
        assert_eq!(matcha_matrix_new(2, 2, ptr::null(), true, &mut z), MatchaStatus::Ok);
    }
    assert_eq!(values(cm), vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(values(z), vec![0.0; 4]);
    unsafe {
        matcha_matrix_free(m);
        matcha_matrix_free(cm);
        matcha_matrix_free(z);
    }
}

#[test]
fn arithmetic_matches_hand_computation() {
    let a = matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let b = matrix(2, 2, &[5.0, 6.0, 7.0, 8.0]);
    let col = matrix(2, 1, &[10.0, 20.0]);
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(matcha_matrix_matmul(a, b, &mut out), MatchaStatus::Ok);
        assert_eq!(values(out), vec![19.0, 22.0, 43.0, 50.0]);
        matcha_matrix_free(out);
        assert_eq!(matcha_matrix_add(a, col, &mut out), MatchaStatus::Ok);
        assert_eq!(values(out), vec![11.0, 12.0, 23.0, 24.0]);
        matcha_matrix_free(out);
        assert_eq!(matcha_matrix_transpose(a, &mut out), MatchaStatus::Ok);
        assert_eq!(values(out), vec![1.0, 3.0, 2.0, 4.0]);
        matcha_matrix_free(out);
        assert_eq!(matcha_matrix_scale(a, 0.5, &mut out), MatchaStatus::Ok);
        assert_eq!(values(out), vec![0.5, 1.0, 1.5, 2.0]);
        matcha_matrix_free(out);
        let mut s = 0.0;
        assert_eq!(matcha_matrix_reduce(b, MatchaReduce::Sum, &mut s), MatchaStatus::Ok);
        assert_eq!(s, 26.0);
        assert_eq!(matcha_matrix_matmul(a, col, &mut out), MatchaStatus::Ok);
        matcha_matrix_free(out);
        assert_eq!(matcha_matrix_matmul(col, a, &mut out), MatchaStatus::Shape);
        assert!(last_error().contains("shape mismatch"));
        for m in [a, b, col] {
            matcha_matrix_free(m);
        }
    }
}

#[test]
fn error_codes_for_bad_arguments() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(matcha_matrix_new(0, 3, ptr::null(), true, &mut out), MatchaStatus::Dimension);
        assert_eq!(matcha_matrix_new(2, 2, ptr::null(), true, ptr::null_mut()), MatchaStatus::NullPointer);
        assert_eq!(matcha_matrix_add(ptr::null(), ptr::null(), &mut out), MatchaStatus::NullPointer);
        let bad = CString::new(r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).unwrap();
        assert_eq!(matcha_matrix_from_json(bad.as_ptr(), &mut out), MatchaStatus::Parse);
        let bad = CString::new("not json").unwrap();
        assert_eq!(matcha_matrix_from_json(bad.as_ptr(), &mut out), MatchaStatus::Parse);
        let m = matrix(2, 2, &[1.0; 4]);
        let mut small = [0.0f32; 3];
        assert_eq!(matcha_matrix_copy_to(m, small.as_mut_ptr(), 3), MatchaStatus::InvalidArgument);
        matcha_matrix_free(m);
        matcha_matrix_free(ptr::null_mut());
    }
    let ok = matrix(1, 1, &[1.0]);
    assert!(matcha_last_error().is_null(), "successful call clears the error");
    unsafe { matcha_matrix_free(ok) };
    let s = unsafe { CStr::from_ptr(matcha_status_str(MatchaStatus::Shape)) };
    assert_eq!(s.to_str().unwrap(), "shape mismatch");
}

#[test]
fn json_round_trip_is_exact() {
    let a = matrix(2, 2, &[0.1, -3.0, 1e-30, 16777217.0]);
    let mut json = ptr::null_mut();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(matcha_matrix_to_json(a, &mut json), MatchaStatus::Ok);
        assert_eq!(matcha_matrix_from_json(json, &mut back), MatchaStatus::Ok);
        matcha_string_free(json);
    }
    let (x, y) = (values(a), values(back));
    assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
    unsafe {
        matcha_matrix_free(a);
        matcha_matrix_free(back);
    }
}

#[test]
fn map_on_context_and_compile_errors() {
    let mut ctx = ptr::null_mut();
    let mut map = ptr::null_mut();
    let mut out = ptr::null_mut();
    let a = matrix(1, 3, &[1.0, 2.0, 3.0]);
    let b = matrix(1, 3, &[4.0, 5.0, 6.0]);
    unsafe {
        assert_eq!(matcha_context_new(&mut ctx), MatchaStatus::Ok);
        let expr = CString::new("a[i] * b[i] + 1.0").unwrap();
        assert_eq!(matcha_map_new(ctx, expr.as_ptr(), 2, &mut map), MatchaStatus::Ok);
        let inputs = [a as *const MatchaMatrix, b as *const MatchaMatrix];
        assert_eq!(matcha_map_apply(map, inputs.as_ptr(), 2, &mut out), MatchaStatus::Ok);
        assert_eq!(values(out), vec![5.0, 11.0, 19.0]);
        matcha_matrix_free(out);
        assert_eq!(matcha_map_apply(map, inputs.as_ptr(), 1, &mut out), MatchaStatus::InvalidArgument);
        matcha_map_free(map);

        let bad = CString::new("a[i] ++ 1").unwrap();
        assert_eq!(matcha_map_new(ptr::null(), bad.as_ptr(), 1, &mut map), MatchaStatus::Compile);
        assert!(last_error().contains("compile"));
        matcha_context_free(ctx);
        matcha_matrix_free(a);
        matcha_matrix_free(b);
    }
}

#[test]
fn backends_agree_through_the_c_api() {
    let a = {
        let mut m = ptr::null_mut();
        assert_eq!(unsafe { matcha_matrix_random(70, 90, 5, &mut m) }, MatchaStatus::Ok);
        m
    };
    let mut results = Vec::new();
    for choice in [MatchaBackend::Seq, MatchaBackend::Parallel, MatchaBackend::Auto] {
        assert_eq!(matcha_set_backend(choice, 0), MatchaStatus::Ok);
        let mut at = ptr::null_mut();
        let mut out = ptr::null_mut();
        unsafe {
            assert_eq!(matcha_matrix_transpose(a, &mut at), MatchaStatus::Ok);
            assert_eq!(matcha_matrix_matmul(a, at, &mut out), MatchaStatus::Ok);
        }
        results.push(values(out));
        unsafe {
            matcha_matrix_free(at);
            matcha_matrix_free(out);
        }
    }
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0], results[2]);
    unsafe { matcha_matrix_free(a) };
}
