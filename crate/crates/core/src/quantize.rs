//! Matrix realizations of the generator algebra and the quantization map.
//!
//! A realization assigns a `dim×dim` matrix to every coordinate generator
//! such that same-family generators satisfy `{Q(ξᵢ), Q(ξⱼ)} = ħ δᵢⱼ I` and
//! generators of different families commute. Each family uses the standard
//! gamma matrices scaled by `√(ħ/2)`; families are combined by tensor product.

use orderings::permutations;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::canon::{self, CanonError, ComplexOrthogonal};
use crate::grassmann::{AlgebraSpec, Generator, GrassmannElement, GrassmannError, Monomial};
use crate::linalg::{self, c64, CMatrix, LinalgError};

/// Tolerance used when a realization is built and validated.
pub const RELATION_TOL: f64 = 1e-12;

/// Realizations larger than this are refused.
pub const MAX_DIM: usize = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error("hbar must be positive and finite, got {0}")]
    InvalidHbar(f64),
    #[error("unsupported realization: {0}")]
    Unsupported(String),
    #[error("element and realization have different generators")]
    AlgebraMismatch,
    #[error("element contains momenta; only coordinate generators are represented")]
    HasMomenta,
    #[error("element has no definite grading")]
    IndefiniteParity,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Canon(#[from] CanonError),
}

/// Matrices representing the coordinate generators, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    algebra: AlgebraSpec,
    hbar: f64,
    dim: usize,
    gens: Vec<CMatrix>,
}

impl Realization {
    /// Wraps user-supplied generator matrices without checking the relations.
    pub fn from_parts(algebra: &AlgebraSpec, hbar: f64, gens: Vec<CMatrix>) -> Result<Self, QuantizeError> {
        check_hbar(hbar)?;
        let algebra = algebra.clone().without_momenta();
        if gens.len() != algebra.num_coordinates() {
            return Err(QuantizeError::Unsupported(format!(
                "{} generator matrices for {} generators",
                gens.len(),
                algebra.num_coordinates()
            )));
        }
        let dim = gens.first().map(|g| g.nrows()).unwrap_or(1);
        if gens.iter().any(|g| g.nrows() != dim || g.ncols() != dim) {
            return Err(QuantizeError::Unsupported("generator matrices differ in shape".into()));
        }
        Ok(Self {
            algebra,
            hbar,
            dim,
            gens,
        })
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.gens
    }

    pub fn generator(&self, g: &Generator) -> Option<&CMatrix> {
        self.algebra.coordinate_position(g).map(|p| &self.gens[p])
    }

    /// Transported realization `Q′(ζᵢ) = Λᵢⱼ Q(ξⱼ)`.
    pub fn transported(&self, lambda: &ComplexOrthogonal) -> Result<Self, QuantizeError> {
        let n = self.gens.len();
        if lambda.n() != n {
            return Err(CanonError::DimensionMismatch {
                expected: n,
                found: lambda.n(),
            }
            .into());
        }
        let leak = canon::family_leak(&self.algebra, lambda);
        if leak > canon::ORTHO_TOL {
            return Err(CanonError::MixesFamilies(leak).into());
        }
        let m = lambda.matrix();
        let gens = (0..n)
            .map(|i| {
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for j in 0..n {
                    if m[(i, j)] != c64(0.0, 0.0) {
                        acc += &self.gens[j] * m[(i, j)];
                    }
                }
                acc
            })
            .collect();
        Ok(Self {
            algebra: self.algebra.clone(),
            hbar: self.hbar,
            dim: self.dim,
            gens,
        })
    }

    fn accepts(&self, f: &GrassmannElement) -> Result<(), QuantizeError> {
        if !f.algebra().same_coordinates(&self.algebra) {
            return Err(QuantizeError::AlgebraMismatch);
        }
        if f.has_momenta() {
            return Err(QuantizeError::HasMomenta);
        }
        Ok(())
    }
}

fn check_hbar(hbar: f64) -> Result<(), QuantizeError> {
    if hbar.is_finite() && hbar > 0.0 {
        Ok(())
    } else {
        Err(QuantizeError::InvalidHbar(hbar))
    }
}

/// Unit-normalized generators `γ` with `{γᵢ, γⱼ} = 2δᵢⱼ`, dimension `2^⌊n/2⌋`.
///
/// `n ≤ 3` uses the Pauli matrices directly; larger sets are built from the
/// set for `n − 2` as `σ₁⊗Γᵢ` plus `σ₂⊗I`, `σ₃⊗I`.
pub fn gamma_matrices(n: usize) -> Vec<CMatrix> {
    let [s1, s2, s3] = linalg::pauli();
    match n {
        0 => Vec::new(),
        1 => vec![linalg::identity(1)],
        2 => vec![s1, s2],
        3 => vec![s1, s2, s3],
        _ => {
            let inner = gamma_matrices(n - 2);
            let d = inner[0].nrows();
            let mut out: Vec<CMatrix> = inner.iter().map(|g| linalg::kron(&s1, g)).collect();
            out.push(linalg::kron(&s2, &linalg::identity(d)));
            out.push(linalg::kron(&s3, &linalg::identity(d)));
            out
        }
    }
}

/// `Q(ξᵢ) = √(ħ/2) σᵢ` on ℂ².
pub fn pauli_realization(hbar: f64) -> Result<Realization, QuantizeError> {
    tensor_realization(&AlgebraSpec::single(3), hbar)
}

/// Tensor-product realization of a multi-family algebra.
///
/// Family `f` acts on the `f`-th tensor factor; for `[3, 3]` this gives
/// `Q(ξᵢ) = √(ħ/2) σᵢ⊗I` and `Q(χᵢ) = √(ħ/2) I⊗σᵢ`.
pub fn tensor_realization(spec: &AlgebraSpec, hbar: f64) -> Result<Realization, QuantizeError> {
    check_hbar(hbar)?;
    let blocks: Vec<Vec<CMatrix>> = spec.family_sizes().iter().map(|&n| gamma_matrices(n)).collect();
    let dims: Vec<usize> = blocks.iter().map(|b| b[0].nrows()).collect();
    let total: usize = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if total > MAX_DIM {
        return Err(QuantizeError::Unsupported(format!(
            "Hilbert dimension {total} exceeds {MAX_DIM}"
        )));
    }
    let scale = c64((hbar / 2.0).sqrt(), 0.0);
    let mut gens = Vec::with_capacity(spec.num_coordinates());
    for (f, block) in blocks.iter().enumerate() {
        let left = linalg::identity(dims[..f].iter().product());
        let right = linalg::identity(dims[f + 1..].iter().product());
        for g in block {
            gens.push(linalg::kron(&linalg::kron(&left, g), &right) * scale);
        }
    }
    Realization::from_parts(spec, hbar, gens)
}

fn ordered_product(r: &Realization, word: &[Generator]) -> CMatrix {
    let mut acc = linalg::identity(r.dim);
    for g in word {
        acc = acc * r.generator(g).expect("generator checked against the realization");
    }
    acc
}

fn monomial_image(r: &Realization, mono: &Monomial) -> CMatrix {
    ordered_product(r, mono.generators())
}

/// The quantization map on a realization.
///
/// Because the realization satisfies the (anti)commutation relations, the
/// graded symmetrization of a canonical monomial collapses to the ordered
/// product of its generator images. Terms are evaluated in parallel and
/// summed in canonical order.
pub fn quantize(f: &GrassmannElement, r: &Realization) -> Result<CMatrix, QuantizeError> {
    r.accepts(f)?;
    let terms: Vec<(&Monomial, &Complex64)> = f.terms().collect();
    let images: Vec<CMatrix> = terms
        .par_iter()
        .map(|(m, c)| monomial_image(r, m) * **c)
        .collect();
    let mut acc = CMatrix::zeros(r.dim, r.dim);
    for im in images {
        acc += im;
    }
    Ok(acc)
}

/// Brute-force graded symmetrization: every monomial is replaced by the
/// average over all orderings of its generators, each ordering weighted by
/// the sign of its same-family transpositions.
pub fn quantize_symmetrized(f: &GrassmannElement, r: &Realization) -> Result<CMatrix, QuantizeError> {
    r.accepts(f)?;
    let mut acc = CMatrix::zeros(r.dim, r.dim);
    for (mono, c) in f.terms() {
        let gens = mono.generators();
        let perms = permutations(gens.len());
        let mut sum = CMatrix::zeros(r.dim, r.dim);
        for p in &perms {
            let word: Vec<Generator> = p.iter().map(|&i| gens[i]).collect();
            let (_, sign) = crate::grassmann::canonical_order(&word).expect("distinct generators");
            sum += ordered_product(r, &word) * c64(sign, 0.0);
        }
        acc += sum * (*c / perms.len() as f64);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Anticommutator,
    Commutator,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub left: String,
    pub right: String,
    pub kind: RelationKind,
    pub violation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    pub max_violation: f64,
    pub tol: f64,
    pub pairs: Vec<PairCheck>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PairCheck> {
        self.pairs.iter().filter(|p| !p.pass)
    }
}

/// Checks every pair `i ≤ j` of generators against the defining relations.
pub fn check_relations(r: &Realization, tol: f64) -> RelationReport {
    let coords = r.algebra.coordinates();
    let id = linalg::identity(r.dim);
    let mut pairs = Vec::new();
    let mut max_violation = 0.0_f64;
    for (a, ga) in coords.iter().enumerate() {
        for (b, gb) in coords.iter().enumerate().skip(a) {
            let (x, y) = (&r.gens[a], &r.gens[b]);
            let (kind, violation) = if ga.family == gb.family {
                let target = if a == b { &id * c64(r.hbar, 0.0) } else { CMatrix::zeros(r.dim, r.dim) };
                (RelationKind::Anticommutator, linalg::max_abs_diff(&(x * y + y * x), &target))
            } else {
                (RelationKind::Commutator, linalg::max_abs(&(x * y - y * x)))
            };
            max_violation = max_violation.max(violation);
            pairs.push(PairCheck {
                left: ga.to_string(),
                right: gb.to_string(),
                kind,
                violation,
                pass: violation <= tol,
            });
        }
    }
    RelationReport {
        max_violation,
        tol,
        pairs,
    }
}

/// `U A U⁻¹`.
pub fn similarity_transport(a: &CMatrix, u: &CMatrix) -> Result<CMatrix, QuantizeError> {
    let uinv = linalg::inverse(u)?;
    if a.shape() != u.shape() {
        return Err(LinalgError::DimensionMismatch {
            expected: u.nrows(),
            found: a.nrows(),
        }
        .into());
    }
    Ok(u * a * uinv)
}

/// `AB − ε BA` with `ε` the commutation factor of the two gradings.
pub fn graded_commutator(a: &CMatrix, b: &CMatrix, epsilon: f64) -> CMatrix {
    a * b - b * a * c64(epsilon, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    /// False when either element has degree above 2; nothing is compared then.
    pub supported: bool,
    pub epsilon: f64,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Compares `[Q(f), Q(g)]_ε` with `iħ Q({f, g}_D)`.
///
/// `f` and `g` live on an algebra with momenta (needed for the bracket) and
/// contain only coordinates. Up to degree 2 the two sides agree exactly.
pub fn correspondence_check(
    f: &GrassmannElement,
    g: &GrassmannElement,
    r: &Realization,
    constraints: &[GrassmannElement],
    tol: f64,
) -> Result<CorrespondenceReport, QuantizeError> {
    let gf = f.grading().ok_or(QuantizeError::IndefiniteParity)?;
    let gg = g.grading().ok_or(QuantizeError::IndefiniteParity)?;
    let epsilon = gf.commutation_sign(&gg);
    if f.degree() > 2 || g.degree() > 2 {
        return Ok(CorrespondenceReport {
            supported: false,
            epsilon,
            residual: f64::NAN,
            tol,
            passed: false,
        });
    }
    let lhs = graded_commutator(&quantize(f, r)?, &quantize(g, r)?, epsilon);
    let bracket = f.dirac(g, constraints)?;
    let rhs = quantize(&bracket, r)? * c64(0.0, r.hbar);
    let residual = linalg::max_abs_diff(&lhs, &rhs);
    Ok(CorrespondenceReport {
        supported: true,
        epsilon,
        residual,
        tol,
        passed: residual <= tol,
    })
}

mod orderings {
    /// All permutations of `0..k` (Heap's algorithm).
    pub fn permutations(k: usize) -> Vec<Vec<usize>> {
        let mut a: Vec<usize> = (0..k).collect();
        let mut out = vec![a.clone()];
        let mut c = vec![0usize; k];
        let mut i = 1;
        while i < k {
            if c[i] < i {
                if i % 2 == 0 {
                    a.swap(0, i);
                } else {
                    a.swap(c[i], i);
                }
                out.push(a.clone());
                c[i] += 1;
                i = 1;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        out
    }
}
