//! Complex-orthogonal changes of generators, `Λ ∈ O(n, ℂ)`.
//!
//! A linear canonical transformation `ζ = Λξ` (equivalently `ξ = Λᵀζ`) keeps
//! the anticommutation relations iff `ΛΛᵀ = I`. Coefficient tensors transform
//! covariantly, pseudo-vector fields pick up a factor `det Λ`, and for the
//! two-spin algebra the 6×6 matrix splits into four 3×3 blocks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grassmann::{AlgebraSpec, Generator, GrassmannElement, GrassmannError, Monomial};
use crate::linalg::{self, c64, CMatrix};

/// Absolute max-norm tolerance for every orthogonality check.
pub const ORTHO_TOL: f64 = 1e-10;

/// Distance from ±1 within which the determinant is snapped.
pub const DET_SNAP: f64 = 1e-8;

/// Largest max-norm accepted from [`random_orthogonal`].
pub const RANDOM_NORM_CAP: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanonError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not complex orthogonal: max |MMᵀ − I| = {0:e}")]
    NotOrthogonal(f64),
    #[error("determinant {0} is not ±1")]
    BadDeterminant(Complex64),
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transformation mixes generator families (off-block entry {0:e})")]
    MixesFamilies(f64),
    #[error("block relations violated by {0:e}")]
    BlockRelations(f64),
    #[error("field square not preserved: {before} vs {after}")]
    SquareNotPreserved { before: Complex64, after: Complex64 },
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// A validated element of `O(n, ℂ)` with its determinant snapped to ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOrthogonal {
    entries: CMatrix,
    det: f64,
}

impl ComplexOrthogonal {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: linalg::identity(n),
            det: 1.0,
        }
    }

    /// `Λᵀ`, which is also `Λ⁻¹`.
    pub fn inverse(&self) -> Self {
        Self {
            entries: self.entries.transpose(),
            det: self.det,
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self, CanonError> {
        if self.n() != other.n() {
            return Err(CanonError::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        verify_orthogonal(&(&self.entries * &other.entries), ORTHO_TOL)
    }

    /// Composition with `diag(−1, 1, …, 1)` on the left; flips the determinant.
    pub fn reflected(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.row_mut(0).neg_mut();
        Self {
            entries,
            det: -self.det,
        }
    }

    /// `max |ΛΛᵀ − I|`.
    pub fn defect(&self) -> f64 {
        orthogonality_defect(&self.entries)
    }
}

pub fn orthogonality_defect(m: &CMatrix) -> f64 {
    linalg::max_abs_diff(&(m * m.transpose()), &linalg::identity(m.nrows()))
}

/// Validates `MMᵀ = I` to `tol` (max-norm) and caches the determinant.
pub fn verify_orthogonal(m: &CMatrix, tol: f64) -> Result<ComplexOrthogonal, CanonError> {
    if m.nrows() != m.ncols() {
        return Err(CanonError::NotSquare(m.nrows(), m.ncols()));
    }
    let defect = orthogonality_defect(m);
    if !(defect <= tol) {
        return Err(CanonError::NotOrthogonal(defect));
    }
    let d = linalg::determinant(m);
    let det = if (d - 1.0).norm() <= DET_SNAP {
        1.0
    } else if (d + 1.0).norm() <= DET_SNAP {
        -1.0
    } else {
        return Err(CanonError::BadDeterminant(d));
    };
    Ok(ComplexOrthogonal {
        entries: m.clone(),
        det,
    })
}

/// Seeded element of `SO(n, ℂ)`: `exp(A_r + i·s·A_c)` with `A_r`, `A_c` real
/// antisymmetric, entries uniform in `[−1, 1]`.
///
/// `s` is halved until the result has max-norm below [`RANDOM_NORM_CAP`].
/// Use [`ComplexOrthogonal::reflected`] for the `det = −1` component.
pub fn random_orthogonal(n: usize, seed: u64, complex_scale: f64) -> ComplexOrthogonal {
    assert!(n >= 1, "random_orthogonal needs n >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ar = CMatrix::zeros(n, n);
    let mut ac = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r: f64 = rng.gen_range(-1.0..=1.0);
            let c: f64 = rng.gen_range(-1.0..=1.0);
            ar[(i, j)] = c64(r, 0.0);
            ar[(j, i)] = c64(-r, 0.0);
            ac[(i, j)] = c64(c, 0.0);
            ac[(j, i)] = c64(-c, 0.0);
        }
    }
    let mut scale = complex_scale;
    loop {
        let a = &ar + &ac * c64(0.0, scale);
        let m = linalg::expm(&a);
        if linalg::max_abs(&m) < RANDOM_NORM_CAP || scale == 0.0 {
            // det exp(A) = exp(tr A) = 1
            return ComplexOrthogonal { entries: m, det: 1.0 };
        }
        scale *= 0.5;
    }
}

/// Transports the coefficients of `f` along `ζ = Λξ`.
///
/// Each degree-k coefficient tensor is contracted with k copies of `Λ`; for
/// antisymmetric tensors this is a sum of k×k minors of `Λ`. Momenta
/// transform with the same matrix as their coordinates. On algebras with
/// more than one family `Λ` must be block diagonal, since mixing commuting
/// and anticommuting generators is not an algebra map.
pub fn transform_coefficients(
    f: &GrassmannElement,
    lambda: &ComplexOrthogonal,
) -> Result<GrassmannElement, CanonError> {
    let algebra = f.algebra();
    let n = algebra.num_coordinates();
    if lambda.n() != n {
        return Err(CanonError::DimensionMismatch {
            expected: n,
            found: lambda.n(),
        });
    }
    let leak = family_leak(algebra, lambda);
    if leak > ORTHO_TOL {
        return Err(CanonError::MixesFamilies(leak));
    }
    let sizes = algebra.family_sizes();
    let offsets = family_offsets(algebra);
    let m = lambda.matrix();

    let mut raw: Vec<(Vec<Generator>, Complex64)> = Vec::new();
    for (mono, coeff) in f.terms() {
        // Canonical order groups generators by (family, slot); each group
        // expands independently.
        let mut expansion: Vec<(Vec<Generator>, Complex64)> = vec![(Vec::new(), *coeff)];
        for group in group_blocks(mono) {
            let fam = group[0].family;
            let slot = group[0].slot;
            let cols: Vec<usize> = group.iter().map(|g| offsets[fam] + g.index).collect();
            let mut next = Vec::new();
            for subset in subsets(sizes[fam], group.len()) {
                let rows: Vec<usize> = subset.iter().map(|&j| offsets[fam] + j).collect();
                let minor = minor_det(m, &rows, &cols);
                if minor == c64(0.0, 0.0) {
                    continue;
                }
                for (word, c) in &expansion {
                    let mut w = word.clone();
                    w.extend(subset.iter().map(|&j| Generator {
                        family: fam,
                        slot,
                        index: j,
                    }));
                    next.push((w, c * minor));
                }
            }
            expansion = next;
        }
        raw.extend(expansion);
    }
    Ok(GrassmannElement::canonicalize(algebra, raw)?)
}

fn group_blocks(mono: &Monomial) -> Vec<Vec<Generator>> {
    let mut out: Vec<Vec<Generator>> = Vec::new();
    for g in mono.generators() {
        match out.last_mut() {
            Some(last) if last[0].family == g.family && last[0].slot == g.slot => last.push(*g),
            _ => out.push(vec![*g]),
        }
    }
    out
}

/// All increasing k-subsets of `0..n`.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn minor_det(m: &CMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    match k {
        0 => c64(1.0, 0.0),
        1 => m[(rows[0], cols[0])],
        2 => m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])],
        _ => {
            let sub = CMatrix::from_fn(k, k, |a, b| m[(rows[a], cols[b])]);
            linalg::determinant(&sub)
        }
    }
}

fn family_offsets(algebra: &AlgebraSpec) -> Vec<usize> {
    algebra
        .family_sizes()
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect()
}

/// Largest entry of `Λ` coupling two different families (0 for one family).
pub fn family_leak(algebra: &AlgebraSpec, lambda: &ComplexOrthogonal) -> f64 {
    let sizes = algebra.family_sizes();
    let offsets = family_offsets(algebra);
    let m = lambda.matrix();
    let mut leak = 0.0_f64;
    for (fa, &oa) in offsets.iter().enumerate() {
        for (fb, &ob) in offsets.iter().enumerate() {
            if fa == fb {
                continue;
            }
            for i in 0..sizes[fa] {
                for j in 0..sizes[fb] {
                    leak = leak.max(m[(oa + i, ob + j)].norm());
                }
            }
        }
    }
    leak
}

/// Substitution images `ξᵢ = Σⱼ Λⱼᵢ ζⱼ` for every coordinate.
pub fn substitution_images(
    algebra: &AlgebraSpec,
    lambda: &ComplexOrthogonal,
) -> Result<Vec<GrassmannElement>, CanonError> {
    let m = lambda.matrix();
    (0..lambda.n())
        .map(|i| {
            let col: Vec<Complex64> = (0..lambda.n()).map(|j| m[(j, i)]).collect();
            GrassmannElement::linear(algebra, &col).map_err(CanonError::from)
        })
        .collect()
}

/// Three complex components of a field (`B`, `C`, `F` or `G`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector(pub [Complex64; 3]);

impl FieldVector {
    pub fn real(x: f64, y: f64, z: f64) -> Self {
        FieldVector([c64(x, 0.0), c64(y, 0.0), c64(z, 0.0)])
    }

    pub fn along_z(b: Complex64) -> Self {
        FieldVector([c64(0.0, 0.0), c64(0.0, 0.0), b])
    }

    /// Bilinear square `F·F = Σ F_k²` (no conjugation).
    pub fn square(&self) -> Complex64 {
        linalg::bilinear_square(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }
}

fn apply3(m: &CMatrix, v: &FieldVector, factor: f64) -> FieldVector {
    let mut out = [c64(0.0, 0.0); 3];
    for (k, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|l| m[(k, l)] * v.0[l]).sum::<Complex64>() * factor;
    }
    FieldVector(out)
}

/// Pseudo-vector transport `F_k = det(Λ) Λ_kl B_l`; checks `F·F = B·B`.
pub fn pushforward_field(b: &FieldVector, lambda: &ComplexOrthogonal) -> Result<FieldVector, CanonError> {
    if lambda.n() != 3 {
        return Err(CanonError::DimensionMismatch {
            expected: 3,
            found: lambda.n(),
        });
    }
    let f = apply3(lambda.matrix(), b, lambda.det());
    let before = b.square();
    let after = f.square();
    if (after - before).norm() > ORTHO_TOL * before.norm().max(1.0) {
        return Err(CanonError::SquareNotPreserved { before, after });
    }
    Ok(f)
}

/// The 3×3 blocks of a 6×6 `Λ = [[R, R′], [S′, S]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub r: CMatrix,
    pub r_prime: CMatrix,
    pub s_prime: CMatrix,
    pub s: CMatrix,
}

impl BlockDecomposition {
    /// Worst violation among `RRᵀ + R′R′ᵀ = I`, `S′S′ᵀ + SSᵀ = I`,
    /// `RS′ᵀ + R′Sᵀ = 0` and `S′Rᵀ + SR′ᵀ = 0`.
    pub fn relation_defect(&self) -> f64 {
        let id = linalg::identity(3);
        let zero = CMatrix::zeros(3, 3);
        let t = |m: &CMatrix| m.transpose();
        [
            linalg::max_abs_diff(&(&self.r * t(&self.r) + &self.r_prime * t(&self.r_prime)), &id),
            linalg::max_abs_diff(&(&self.s_prime * t(&self.s_prime) + &self.s * t(&self.s)), &id),
            linalg::max_abs_diff(&(&self.r * t(&self.s_prime) + &self.r_prime * t(&self.s)), &zero),
            linalg::max_abs_diff(&(&self.s_prime * t(&self.r) + &self.s * t(&self.r_prime)), &zero),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn reassemble(&self) -> CMatrix {
        let mut m = CMatrix::zeros(6, 6);
        m.view_mut((0, 0), (3, 3)).copy_from(&self.r);
        m.view_mut((0, 3), (3, 3)).copy_from(&self.r_prime);
        m.view_mut((3, 0), (3, 3)).copy_from(&self.s_prime);
        m.view_mut((3, 3), (3, 3)).copy_from(&self.s);
        m
    }

    /// True when `R′` and `S′` vanish, so the two spins do not mix.
    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        linalg::max_abs(&self.r_prime) <= tol && linalg::max_abs(&self.s_prime) <= tol
    }
}

pub fn block_decompose(lambda: &ComplexOrthogonal) -> Result<BlockDecomposition, CanonError> {
    if lambda.n() != 6 {
        return Err(CanonError::DimensionMismatch {
            expected: 6,
            found: lambda.n(),
        });
    }
    let m = lambda.matrix();
    let blocks = BlockDecomposition {
        r: m.view((0, 0), (3, 3)).into_owned(),
        r_prime: m.view((0, 3), (3, 3)).into_owned(),
        s_prime: m.view((3, 0), (3, 3)).into_owned(),
        s: m.view((3, 3), (3, 3)).into_owned(),
    };
    let defect = blocks.relation_defect();
    if defect > ORTHO_TOL {
        return Err(CanonError::BlockRelations(defect));
    }
    Ok(blocks)
}

/// Result of transporting the two-spin fields and coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedFields {
    pub f: FieldVector,
    pub g: FieldVector,
    pub j: CMatrix,
}

/// `F = det(R) R B`, `G = det(S) S C`, `J′ = R J Sᵀ` for a block-diagonal
/// transformation `diag(R, S)`.
pub fn two_spin_field_transform(
    b: &FieldVector,
    c: &FieldVector,
    j: &[[f64; 3]; 3],
    r: &ComplexOrthogonal,
    s: &ComplexOrthogonal,
) -> Result<TransformedFields, CanonError> {
    let f = pushforward_field(b, r)?;
    let g = pushforward_field(c, s)?;
    let jm = CMatrix::from_fn(3, 3, |a, b| c64(j[a][b], 0.0));
    let jp = r.matrix() * jm * s.matrix().transpose();
    Ok(TransformedFields { f, g, j: jp })
}

/// `diag(a, b)` as a 6×6 transformation.
pub fn block_diagonal(a: &ComplexOrthogonal, b: &ComplexOrthogonal) -> Result<ComplexOrthogonal, CanonError> {
    let mut m = CMatrix::zeros(a.n() + b.n(), a.n() + b.n());
    m.view_mut((0, 0), (a.n(), a.n())).copy_from(a.matrix());
    m.view_mut((a.n(), a.n()), (b.n(), b.n())).copy_from(b.matrix());
    verify_orthogonal(&m, ORTHO_TOL)
}

/// Active rotation by a complex angle in the `(p, q)` plane:
/// `e_p ↦ cos θ e_p + sin θ e_q`.
pub fn plane_rotation(n: usize, p: usize, q: usize, theta: Complex64) -> CMatrix {
    let mut m = linalg::identity(n);
    m[(p, p)] = theta.cos();
    m[(q, q)] = theta.cos();
    m[(p, q)] = -theta.sin();
    m[(q, p)] = theta.sin();
    m
}
