//! `{"rows": r, "cols": c, "data": [...]}` with row-major data.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f32`, and read back with `f32` parsing directly from the token text, so
//! the round trip is bit-exact (including `-0.0`).

use std::fmt::Write as _;

use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

use super::{Matrix, MatrixError};

#[derive(serde::Deserialize)]
struct MatrixDoc<'a> {
    rows: usize,
    cols: usize,
    #[serde(borrow)]
    data: Vec<&'a RawValue>,
}

pub(crate) fn format_f32(out: &mut String, v: f32) {
    const EXACT_INT: f32 = 16_777_216.0;
    if v.fract() == 0.0 && v.abs() <= EXACT_INT && !(v == 0.0 && v.is_sign_negative()) {
        let _ = write!(out, "{}", v as i64);
    } else {
        let _ = write!(out, "{:?}", v);
    }
}

pub fn to_json(m: &Matrix) -> String {
    let data = m.to_vec();
    let mut out = String::with_capacity(32 + data.len() * 12);
    let _ = write!(out, "{{\"rows\":{},\"cols\":{},\"data\":[", m.rows(), m.cols());
    for (k, &v) in data.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        format_f32(&mut out, v);
    }
    out.push_str("]}");
    out
}

pub fn from_json(text: &str) -> Result<Matrix, MatrixError> {
    let doc: MatrixDoc<'_> = serde_json::from_str(text).map_err(|e| MatrixError::Parse {
        position: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if doc.rows == 0 || doc.cols == 0 {
        return Err(MatrixError::Dimension { rows: doc.rows, cols: doc.cols });
    }
    let expected = doc.rows.checked_mul(doc.cols).ok_or(MatrixError::Dimension {
        rows: doc.rows,
        cols: doc.cols,
    })?;
    if doc.data.len() != expected {
        return Err(MatrixError::Parse {
            position: "data".into(),
            message: format!(
                "expected {} elements for a {}x{} matrix, found {}",
                expected,
                doc.rows,
                doc.cols,
                doc.data.len()
            ),
        });
    }
    let mut data = Vec::with_capacity(expected);
    for (k, raw) in doc.data.iter().enumerate() {
        let token = raw.get().trim();
        let numeric = token
            .chars()
            .next()
            .is_some_and(|c| c == '-' || c.is_ascii_digit());
        let value = numeric.then(|| token.parse::<f32>().ok()).flatten();
        match value {
            Some(v) if v.is_finite() => data.push(v),
            Some(_) => {
                return Err(MatrixError::Parse {
                    position: format!("data[{k}]"),
                    message: format!("`{token}` is not representable as a finite f32"),
                })
            }
            None => {
                return Err(MatrixError::Parse {
                    position: format!("data[{k}]"),
                    message: format!("expected a number, found `{token}`"),
                })
            }
        }
    }
    Matrix::from_vec(doc.rows, doc.cols, data)
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(to_json(self)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Box::<RawValue>::deserialize(deserializer)?;
        from_json(raw.get()).map_err(serde::de::Error::custom)
    }
}
