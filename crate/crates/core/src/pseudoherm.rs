//! Inner-product geometry for non-hermitian operators.
//!
//! A metric is a positive-definite hermitian matrix `ρ` defining
//! `⟨x, y⟩_ρ = ⟨x, ρy⟩`. An operator `A` is ρ-hermitian when `ρA = A†ρ`.
//! [`diagnose`] decides whether such a metric exists for a given `A` and
//! builds one from the eigenvectors when it does.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, ComplexJson};
use crate::linalg::{self, c64, CMatrix, CVector, LinalgError};

/// Hermiticity tolerance for [`Metric`] validation.
pub const METRIC_HERMITIAN_TOL: f64 = 1e-12;

/// Default reality tolerance: `|Im λ| ≤ tol·(1 + |λ|)`.
pub const DEFAULT_REALITY_TOL: f64 = 1e-9;

/// Eigenvector matrices worse conditioned than this count as defective.
pub const CONDITION_CAP: f64 = 1e8;

/// Largest accepted `‖ρA − A†ρ‖_max` for a metric built by [`diagnose`].
pub const METRIC_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PseudohermError {
    #[error("metric is not hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("metric is not positive definite (smallest eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Positive-definite hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    matrix: CMatrix,
    min_eigenvalue: f64,
}

impl Metric {
    pub fn new(matrix: CMatrix) -> Result<Self, PseudohermError> {
        linalg::ensure_square(&matrix)?;
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > METRIC_HERMITIAN_TOL * linalg::max_abs(&matrix).max(1.0) {
            return Err(PseudohermError::NotHermitian(defect));
        }
        let min_eigenvalue = linalg::hermitian_eigenvalues(&matrix).first().copied().unwrap_or(1.0);
        if !(min_eigenvalue > 0.0) {
            return Err(PseudohermError::NotPositive(min_eigenvalue));
        }
        Ok(Self {
            matrix,
            min_eigenvalue,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: linalg::identity(n),
            min_eigenvalue: 1.0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), PseudohermError> {
    if expected == found {
        Ok(())
    } else {
        Err(PseudohermError::DimensionMismatch { expected, found })
    }
}

/// `⟨x, ηy⟩`, conjugate-linear in `x`.
pub fn eta_inner(x: &CVector, y: &CVector, eta: &Metric) -> Result<Complex64, PseudohermError> {
    check_dim(eta.dim(), x.len())?;
    check_dim(eta.dim(), y.len())?;
    Ok(x.dotc(&(eta.matrix() * y)))
}

/// `ρ⁻¹ A† ρ`.
pub fn rho_adjoint(a: &CMatrix, rho: &Metric) -> Result<CMatrix, PseudohermError> {
    check_dim(rho.dim(), a.nrows())?;
    let inv = linalg::inverse(rho.matrix())?;
    Ok(inv * a.adjoint() * rho.matrix())
}

/// `‖ρA − A†ρ‖_max`.
pub fn rho_hermiticity_defect(a: &CMatrix, rho: &CMatrix) -> f64 {
    linalg::max_abs_diff(&(rho * a), &(a.adjoint() * rho))
}

pub fn is_rho_hermitian(a: &CMatrix, rho: &Metric, tol: f64) -> bool {
    a.shape() == rho.matrix().shape() && rho_hermiticity_defect(a, rho.matrix()) <= tol
}

/// `ρ = (U†)⁻¹ η U⁻¹`, so that `U` is an isometry from `(H, η)` to `(H, ρ)`.
pub fn metric_from_isomorphism(u: &CMatrix, eta: &Metric) -> Result<Metric, PseudohermError> {
    check_dim(eta.dim(), u.nrows())?;
    let uinv = linalg::inverse(u)?;
    let rho = uinv.adjoint() * eta.matrix() * &uinv;
    Metric::new(hermitian_part(&rho))
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// Outcome of [`diagnose`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnosis {
    pub spectrum: Vec<ComplexJson>,
    pub real: bool,
    pub diagonalizable: bool,
    /// Condition number of the unit-column eigenvector matrix.
    pub condition: f64,
    #[serde(with = "io::opt_matrix")]
    pub metric: Option<CMatrix>,
    /// `‖ρA − A†ρ‖_max` for the returned metric.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
}

impl Diagnosis {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.spectrum.iter().map(|&z| z.into()).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.spectrum.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
    }

    pub fn is_pseudo_hermitian(&self) -> bool {
        self.metric.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnoses always serialize")
    }
}

pub fn spectrum_is_real(values: &[Complex64], tol: f64) -> bool {
    values.iter().all(|z| z.im.abs() <= tol * (1.0 + z.norm()))
}

/// Decides pseudo-hermiticity of `a` and constructs `ρ = (SS†)⁻¹`.
///
/// `S` holds unit-norm eigenvectors as columns. The metric is only reported
/// when the spectrum is real, `S` is well conditioned, and the result
/// passes `ρA = A†ρ`.
pub fn diagnose(a: &CMatrix, tol: f64) -> Diagnosis {
    let failed = |spectrum: Vec<Complex64>| Diagnosis {
        spectrum: io::spectrum_to_json(&spectrum),
        real: false,
        diagonalizable: false,
        condition: f64::INFINITY,
        metric: None,
        residual: None,
    };
    let eig = match linalg::eigen(a) {
        Ok(e) => e,
        Err(_) => return failed(Vec::new()),
    };
    let mut spectrum = eig.values.clone();
    linalg::sort_spectrum(&mut spectrum);
    let real = spectrum_is_real(&spectrum, tol);
    let condition = eig.vector_condition();
    let diagonalizable = condition.is_finite() && condition <= CONDITION_CAP;
    let mut out = Diagnosis {
        spectrum: io::spectrum_to_json(&spectrum),
        real,
        diagonalizable,
        condition,
        metric: None,
        residual: None,
    };
    if real && diagonalizable {
        let s = &eig.vectors;
        if let Ok(rho) = linalg::inverse(&(s * s.adjoint())) {
            let rho = hermitian_part(&rho);
            let residual = rho_hermiticity_defect(a, &rho);
            let scale = linalg::max_abs(a).max(1.0) * linalg::max_abs(&rho).max(1.0);
            if residual <= METRIC_RESIDUAL_TOL * scale && Metric::new(rho.clone()).is_ok() {
                out.metric = Some(rho);
                out.residual = Some(residual);
            }
        }
    }
    out
}

/// True iff `‖S†ρS − ρ‖_max ≤ tol`.
pub fn verify_rho_preserving(s: &CMatrix, rho: &Metric, tol: f64) -> bool {
    s.shape() == rho.matrix().shape()
        && linalg::max_abs_diff(&(s.adjoint() * rho.matrix() * s), rho.matrix()) <= tol
}
