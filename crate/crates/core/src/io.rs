//! JSON formats shared by the library and the command line.
//!
//! Complex numbers are `{"re": …, "im": …}` objects and matrices are arrays of
//! rows of such objects.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::FieldVector;
use crate::linalg::CMatrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("ragged matrix: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("expected {expected} components, found {found}")]
    Length { expected: usize, found: usize },
    #[error(transparent)]
    File(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn matrix_to_rows(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &MatrixJson) -> Result<CMatrix, IoError> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(IoError::Ragged {
                row: i,
                expected: ncols,
                found: r.len(),
            });
        }
        for (j, z) in r.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(IoError::NonFinite(i, j));
            }
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j].into()))
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&matrix_to_rows(m)).expect("matrices always serialize")
}

pub fn matrix_from_json(s: &str) -> Result<CMatrix, IoError> {
    matrix_from_rows(&serde_json::from_str(s)?)
}

pub fn field_from_json(s: &str) -> Result<FieldVector, IoError> {
    let v: Vec<ComplexJson> = serde_json::from_str(s)?;
    if v.len() != 3 {
        return Err(IoError::Length {
            expected: 3,
            found: v.len(),
        });
    }
    Ok(FieldVector([v[0].into(), v[1].into(), v[2].into()]))
}

pub fn spectrum_to_json(values: &[Complex64]) -> Vec<ComplexJson> {
    values.iter().map(|&z| z.into()).collect()
}

/// Serde adapter for `Option<CMatrix>` fields.
pub mod opt_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(matrix_to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
        let rows: Option<MatrixJson> = Option::deserialize(d)?;
        rows.map(|r| matrix_from_rows(&r).map_err(serde::de::Error::custom))
            .transpose()
    }
}
