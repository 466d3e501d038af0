//! Small dense complex linear algebra used throughout the crate.
//!
//! Everything here works on `DMatrix<Complex64>`. The eigensolver is a complex
//! Schur factorization followed by triangular back-substitution for the
//! eigenvectors; the exponential is a scaled Taylor series.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is numerically singular (condition number {condition:e})")]
    Singular { condition: f64 },
    #[error("Schur iteration did not converge")]
    NoConvergence,
}

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// The three Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli() -> [CMatrix; 3] {
    let z = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Kronecker product with the standard block layout `(a ⊗ b)[(i·p+k, j·q+l)] = a[i,j]·b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn ensure_square(m: &CMatrix) -> Result<usize, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// 2-norm condition number `σ_max / σ_min`; infinite when `σ_min` is zero.
pub fn condition_number(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, refusing matrices whose condition number exceeds `1e14`.
pub fn inverse(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    ensure_square(m)?;
    let condition = condition_number(m);
    if !condition.is_finite() || condition > 1e14 {
        return Err(LinalgError::Singular { condition });
    }
    m.clone()
        .try_inverse()
        .ok_or(LinalgError::Singular { condition })
}

/// Eigenvalues and unit-norm eigenvectors (as columns) of a general complex matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn vector_condition(&self) -> f64 {
        condition_number(&self.vectors)
    }

    /// `max |A v − λ v|` over all eigenpairs.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for (k, lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            let r = a * v - v * *lambda;
            worst = r.iter().fold(worst, |acc, z| acc.max(z.norm()));
        }
        worst
    }
}

/// Eigen-decomposition via complex Schur form `A = Q T Q†`.
///
/// Eigenvectors of `T` are found by back-substitution. Inside a cluster of
/// numerically equal eigenvalues with a vanishing coupling the component is
/// set to zero, so normal matrices come out with orthonormal eigenvectors.
pub fn eigen(a: &CMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000).ok_or(LinalgError::NoConvergence)?;
    let (q, t) = schur.unpack();
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let perturb = f64::EPSILON * scale;
    let cluster = 1e-10 * scale.max(1.0);

    let values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let mut y_all = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[k] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut num = Complex64::new(0.0, 0.0);
            for m in (j + 1)..=k {
                num += t[(j, m)] * y[m];
            }
            let den = t[(j, j)] - lambda;
            y[j] = if den.norm() <= cluster && num.norm() <= cluster {
                Complex64::new(0.0, 0.0)
            } else if den.norm() < perturb {
                -num / Complex64::new(perturb, 0.0)
            } else {
                -num / den
            };
        }
        for (j, yj) in y.into_iter().enumerate() {
            y_all[(j, k)] = yj;
        }
    }
    let mut vectors = q * y_all;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= Complex64::new(norm, 0.0);
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues of a hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Matrix exponential by scaling and squaring of a 12-term Taylor polynomial.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    // Induced 1-norm.
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.25 {
        squarings = (norm1 / 0.25).log2().ceil() as u32;
    }
    let x = a * Complex64::new(0.5_f64.powi(squarings as i32), 0.0);
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=12 {
        term = &term * &x * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Determinant via LU factorization.
pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().determinant()
}

/// Bilinear (not sesquilinear) square `Σ vᵢ²`.
pub fn bilinear_square(v: &[Complex64]) -> Complex64 {
    v.iter().map(|z| z * z).sum()
}

/// Sorts by real part, then imaginary part.
pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Greedy matching distance between two spectra of equal length.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra of different length");
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("spectra of equal length");
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        // Small LCG keeps this test free of RNG dependencies.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(n, n, |_, _| c64(next(), next()))
    }

    #[test]
    fn pauli_algebra() {
        let [s1, s2, s3] = pauli();
        let i = c64(0.0, 1.0);
        assert!(max_abs_diff(&(&s1 * &s2), &(&s3 * i)) < 1e-15);
        assert!(max_abs_diff(&(&s1 * &s1), &identity(2)) < 1e-15);
    }

    #[test]
    fn kron_layout() {
        let [_, _, s3] = pauli();
        let k = kron(&s3, &identity(2));
        let diag: Vec<f64> = (0..4).map(|i| k[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn eigen_random_residual() {
        for seed in 0..20 {
            let a = random_matrix(5, seed);
            let e = eigen(&a).unwrap();
            assert!(e.residual(&a) < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn eigen_hermitian_degenerate_is_orthonormal() {
        // Heisenberg coupling: triplet is threefold degenerate.
        let [s1, s2, s3] = pauli();
        let h = kron(&s1, &s1) + kron(&s2, &s2) + kron(&s3, &s3);
        let e = eigen(&h).unwrap();
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs_diff(&gram, &identity(4)) < 1e-10);
        assert!(e.residual(&h) < 1e-12);
    }

    #[test]
    fn eigen_jordan_block_is_ill_conditioned() {
        let j = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let e = eigen(&j).unwrap();
        assert!(e.vector_condition() > 1e8);
    }

    #[test]
    fn expm_matches_diagonal() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(0.3, 1.0), c64(-2.0, 0.5), c64(5.0, -3.0)]));
        let e = expm(&d);
        for k in 0..3 {
            assert!((e[(k, k)] - d[(k, k)].exp()).norm() < 1e-12 * d[(k, k)].exp().norm().max(1.0));
        }
    }

    #[test]
    fn expm_group_law() {
        let a = random_matrix(4, 7);
        let lhs = expm(&(&a * c64(0.3, 0.0))) * expm(&(&a * c64(0.9, 0.0)));
        let rhs = expm(&(&a * c64(1.2, 0.0)));
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12 * max_abs(&rhs).max(1.0));
    }

    #[test]
    fn singular_inverse_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(2.0, 0.0), c64(4.0, 0.0)]);
        assert!(matches!(inverse(&m), Err(LinalgError::Singular { .. })));
    }
}
