use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "matcha.h"

int main(void) {
    float a[] = {1, 2, 3, 4};
    MatchaMatrix *m = NULL, *t = NULL, *p = NULL;
    if (matcha_matrix_new(2, 2, a, true, &m) != MATCHA_STATUS_OK) return 10;
    if (matcha_matrix_transpose(m, &t) != MATCHA_STATUS_OK) return 11;
    if (matcha_matrix_matmul(m, t, &p) != MATCHA_STATUS_OK) return 12;
    float v = 0;
    if (matcha_matrix_get(p, 1, 1, &v) != MATCHA_STATUS_OK || v != 25.0f) return 13;
    if (matcha_matrix_get(p, 5, 0, &v) != MATCHA_STATUS_INDEX) return 14;
    if (matcha_last_error() == NULL) return 15;
    char *json = NULL;
    if (matcha_matrix_to_json(p, &json) != MATCHA_STATUS_OK) return 16;
    printf("%s\n", json);
    matcha_string_free(json);
    matcha_matrix_free(p);
    matcha_matrix_free(t);
    matcha_matrix_free(m);
    return 0;
}
"#;

fn library_dir() -> PathBuf {
    // target/<profile>/deps/<test-binary> -> target/<profile>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/matcha.h")).unwrap();
    for symbol in ["typedef struct MatchaMatrix MatchaMatrix", "MATCHA_STATUS_SHAPE", "matcha_matrix_matmul", "matcha_map_apply", "matcha_last_error"] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}

#[test]
fn c_program_links_against_the_shared_library() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib_dir = library_dir();
    let so = lib_dir.join(if cfg!(target_os = "macos") { "libmatcha_ffi.dylib" } else { "libmatcha_ffi.so" });
    if !cfg!(unix) || !so.exists() {
        eprintln!("shared library not found at {}; skipping", so.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg("-o")
        .arg(&exe)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lmatcha_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "smoke program failed: {out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), r#"{"rows":2,"cols":2,"data":[5,11,11,25]}"#);
}
