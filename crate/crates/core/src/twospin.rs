//! Single- and two-spin Hamiltonians, their spectra and pseudo-hermitian
//! regime, the hermitian counterpart with its isomorphism, and dynamics.
//!
//! Two-spin operators act on ℂ²⊗ℂ² with `ρₖ = σₖ⊗I` and `Σₖ = I⊗σₖ`. The
//! parallel-field model is
//!
//! ```text
//! Ĥ = ¼ [ρ₃G₃ + Σ₃F₃ + J Σₖ ρₖΣₖ]
//! ```
//!
//! whose eigenvalues are `(−J ± √(4J²+F₋²))/4` and `(J ± F₊)/4` with
//! `F± = F₃ ± G₃`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c64, CMatrix, CVector, LinalgError};
use crate::pseudoherm::{self, Metric, PseudohermError, CONDITION_CAP};

/// Relative tolerance for the reality tests on `F₊` and `F₋²`.
pub const REGIME_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoSpinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parameters are not in the pseudo-hermitian regime: {0}")]
    NotPseudoHermitian(String),
    #[error("F- is real and nonzero; the isomorphism is only built for imaginary F-")]
    RealBranch,
    #[error("J = 0 makes the isomorphism singular")]
    ZeroCoupling,
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Pseudoherm(#[from] PseudohermError),
}

/// Parallel z-fields `F₃`, `G₃` and an isotropic real coupling `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpinParams {
    pub f3: Complex64,
    pub g3: Complex64,
    pub j: f64,
}

impl TwoSpinParams {
    pub fn new(f3: Complex64, g3: Complex64, j: f64) -> Result<Self, TwoSpinError> {
        let p = Self { f3, g3, j };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TwoSpinError> {
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(self.f3) || !finite(self.g3) || !self.j.is_finite() {
            return Err(TwoSpinError::InvalidParameter("fields and coupling must be finite".into()));
        }
        Ok(())
    }

    pub fn from_gilbert(g: &GilbertParams, j: f64) -> Result<Self, TwoSpinError> {
        let (f3, g3) = gilbert_fields(g)?;
        Self::new(f3, g3, j)
    }

    /// `α₁ = −α₂ = α`.
    pub fn toy(j: f64, b: f64, alpha: f64) -> Result<Self, TwoSpinError> {
        Self::from_gilbert(&GilbertParams::new(b, alpha, -alpha)?, j)
    }

    pub fn f_plus(&self) -> Complex64 {
        self.f3 + self.g3
    }

    pub fn f_minus(&self) -> Complex64 {
        self.f3 - self.g3
    }

    /// Same `F₊` and `Re F₋`, with `Im F₋` replaced.
    pub fn with_im_f_minus(&self, im: f64) -> Self {
        let fp = self.f_plus();
        let fm = c64(self.f_minus().re, im);
        Self {
            f3: (fp + fm) * 0.5,
            g3: (fp - fm) * 0.5,
            j: self.j,
        }
    }
}

/// Field amplitude and Gilbert damping parameters of the two sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GilbertParams {
    pub b: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl GilbertParams {
    pub fn new(b: f64, alpha1: f64, alpha2: f64) -> Result<Self, TwoSpinError> {
        let g = Self { b, alpha1, alpha2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), TwoSpinError> {
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(TwoSpinError::InvalidParameter(format!("B must be positive, got {}", self.b)));
        }
        if !self.alpha1.is_finite() || !self.alpha2.is_finite() {
            return Err(TwoSpinError::InvalidParameter("damping parameters must be finite".into()));
        }
        Ok(())
    }
}

/// `F₃ = (1+iα₁)B/(1+α₁²)`, `G₃ = (1+iα₂)B/(1+α₂²)`.
pub fn gilbert_fields(g: &GilbertParams) -> Result<(Complex64, Complex64), TwoSpinError> {
    g.validate()?;
    let field = |a: f64| c64(1.0, a) * (g.b / (1.0 + a * a));
    Ok((field(g.alpha1), field(g.alpha2)))
}

/// `B_max = J(α²+1)/|α|`; the toy model is pseudo-hermitian for `B < B_max`.
pub fn damping_threshold(j: f64, alpha: f64) -> Result<f64, TwoSpinError> {
    if !(j > 0.0) || !j.is_finite() {
        return Err(TwoSpinError::InvalidParameter(format!("J must be positive, got {j}")));
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(TwoSpinError::InvalidParameter(
            "alpha = 0 has no threshold (always pseudo-hermitian)".into(),
        ));
    }
    Ok(j * (alpha * alpha + 1.0) / alpha.abs())
}

fn sigma_dot(v: &[Complex64; 3]) -> CMatrix {
    let [s1, s2, s3] = linalg::pauli();
    s1 * v[0] + s2 * v[1] + s3 * v[2]
}

/// `(ħ/2) σ·F`.
pub fn build_single_spin(f: &[Complex64; 3], hbar: f64) -> CMatrix {
    sigma_dot(f) * c64(hbar / 2.0, 0.0)
}

/// `¼ [Σ·F + ρ·G]`, i.e. `F` on the second tensor factor and `G` on the first.
pub fn build_free(f: &[Complex64; 3], g: &[Complex64; 3]) -> CMatrix {
    let id = linalg::identity(2);
    (linalg::kron(&id, &sigma_dot(f)) + linalg::kron(&sigma_dot(g), &id)) * c64(0.25, 0.0)
}

/// `⅛ Jᵢⱼ (σᵢ⊗σⱼ + σⱼ⊗σᵢ)`.
pub fn build_interaction(j: &[[f64; 3]; 3]) -> CMatrix {
    let s = linalg::pauli();
    let mut out = CMatrix::zeros(4, 4);
    for a in 0..3 {
        for b in 0..3 {
            if j[a][b] != 0.0 {
                out += (linalg::kron(&s[a], &s[b]) + linalg::kron(&s[b], &s[a])) * c64(j[a][b] / 8.0, 0.0);
            }
        }
    }
    out
}

pub fn isotropic(j: f64) -> [[f64; 3]; 3] {
    [[j, 0.0, 0.0], [0.0, j, 0.0], [0.0, 0.0, j]]
}

fn z_field(v: Complex64) -> [Complex64; 3] {
    [c64(0.0, 0.0), c64(0.0, 0.0), v]
}

/// `¼ [ρ₃G₃ + Σ₃F₃ + J Σₖ ρₖΣₖ]`.
pub fn build_total(p: &TwoSpinParams) -> CMatrix {
    build_free(&z_field(p.f3), &z_field(p.g3)) + build_interaction(&isotropic(p.j))
}

/// Closed-form spectrum and regime of [`build_total`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub f_plus: Complex64,
    pub f_minus: Complex64,
    pub e1_plus: Complex64,
    pub e1_minus: Complex64,
    pub e2_plus: Complex64,
    pub e2_minus: Complex64,
    pub pseudo_hermitian: bool,
    /// `4J² + F₋²` when it is real, NaN otherwise.
    pub threshold_margin: f64,
}

impl RegimeReport {
    pub fn eigenvalues(&self) -> [Complex64; 4] {
        [self.e1_plus, self.e1_minus, self.e2_plus, self.e2_minus]
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
    }
}

fn nearly_real(z: Complex64) -> bool {
    z.im.abs() <= REGIME_TOL * (1.0 + z.norm())
}

pub fn closed_spectrum(p: &TwoSpinParams) -> RegimeReport {
    let fp = p.f_plus();
    let fm = p.f_minus();
    let j = c64(p.j, 0.0);
    let disc = j * j * 4.0 + fm * fm;
    let root = disc.sqrt();
    let fm2 = fm * fm;
    let margin = if nearly_real(disc) { disc.re } else { f64::NAN };
    let scale = 4.0 * p.j * p.j + fm2.norm();
    // At 4J² + F₋² = 0 the middle block is a Jordan block unless it vanishes
    // outright (J = F₋ = 0), in which case Ĥ is diagonal.
    let tol = REGIME_TOL * scale.max(1.0);
    let vanishing = p.j.abs() <= tol && fm.norm() <= tol;
    let pseudo_hermitian =
        nearly_real(fp) && nearly_real(fm2) && margin.is_finite() && (margin > tol || vanishing);
    RegimeReport {
        f_plus: fp,
        f_minus: fm,
        e1_plus: (-j + root) * 0.25,
        e1_minus: (-j - root) * 0.25,
        e2_plus: (j + fp) * 0.25,
        e2_minus: (j - fp) * 0.25,
        pseudo_hermitian,
        threshold_margin: margin,
    }
}

fn require_regime(p: &TwoSpinParams) -> Result<RegimeReport, TwoSpinError> {
    p.validate()?;
    let r = closed_spectrum(p);
    if !r.pseudo_hermitian {
        return Err(TwoSpinError::NotPseudoHermitian(format!(
            "F+ = {}, F-^2 = {}, 4J^2 + F-^2 = {}",
            r.f_plus,
            r.f_minus * r.f_minus,
            c64(4.0 * p.j * p.j, 0.0) + r.f_minus * r.f_minus
        )));
    }
    Ok(r)
}

/// Real fields and anisotropic coupling of the hermitian counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterpart {
    pub h_r: CMatrix,
    /// Coefficient of `ρ₃`.
    pub b3: f64,
    /// Coefficient of `Σ₃`.
    pub c3: f64,
    pub j_tilde: [f64; 3],
}

/// `H_R = ¼ [B₃ρ₃ + C₃Σ₃ + Σₖ J̃ₖ ρₖΣₖ]` with `B₃ = (F₊ − Re F₋)/2`,
/// `C₃ = (F₊ + Re F₋)/2`, `J̃₁ = J̃₂ = sgn(J)√(4J² − (Im F₋)²)/2`, `J̃₃ = J`.
///
/// `B₃` multiplies `ρ₃` like `G₃` does in `Ĥ`, so `H_R = Ĥ` whenever `Ĥ` is
/// already hermitian.
pub fn hermitian_counterpart(p: &TwoSpinParams) -> Result<Counterpart, TwoSpinError> {
    let r = require_regime(p)?;
    let fp = r.f_plus.re;
    let fm = r.f_minus;
    let b3 = (fp - fm.re) / 2.0;
    let c3 = (fp + fm.re) / 2.0;
    let s = (4.0 * p.j * p.j - fm.im * fm.im).max(0.0).sqrt();
    let jt = if p.j < 0.0 { -s / 2.0 } else { s / 2.0 };
    let j_tilde = [jt, jt, p.j];
    let s = linalg::pauli();
    let id = linalg::identity(2);
    let mut h = linalg::kron(&s[2], &id) * c64(b3, 0.0) + linalg::kron(&id, &s[2]) * c64(c3, 0.0);
    for k in 0..3 {
        h += linalg::kron(&s[k], &s[k]) * c64(j_tilde[k], 0.0);
    }
    Ok(Counterpart {
        h_r: h * c64(0.25, 0.0),
        b3,
        c3,
        j_tilde,
    })
}

/// The isomorphism `U` with `U⁻¹ĤU = H_R` and the metric `ρ = (UU†)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Isomorphism {
    pub u: CMatrix,
    pub rho: Metric,
}

/// `U = 1 ⊕ [[s/(2|J|), −F₋/(2J)], [0, 1]] ⊕ 1` with `s = √(4J²+F₋²)`.
///
/// For `J > 0` the upper-left entry is the usual `(E₊⁽¹⁾+J)/(2J)` in unscaled
/// units. Only `Re F₋ = 0` is accepted; `F₋ = 0` gives `U = I`. The
/// hermiticity of `U⁻¹ĤU`, its equality with [`hermitian_counterpart`] and
/// the ρ-hermiticity of `Ĥ` are checked before returning.
pub fn paper_isomorphism(p: &TwoSpinParams) -> Result<Isomorphism, TwoSpinError> {
    let r = require_regime(p)?;
    let fm = r.f_minus;
    if fm.re.abs() > REGIME_TOL * (1.0 + fm.norm()) {
        return Err(TwoSpinError::RealBranch);
    }
    let mut u = linalg::identity(4);
    if fm.im != 0.0 {
        if p.j == 0.0 {
            return Err(TwoSpinError::ZeroCoupling);
        }
        let fm = c64(0.0, fm.im);
        let s = (4.0 * p.j * p.j - fm.im * fm.im).sqrt();
        u[(1, 1)] = c64(s / (2.0 * p.j.abs()), 0.0);
        u[(1, 2)] = -fm / (2.0 * p.j);
    }
    let h = build_total(p);
    let uinv = linalg::inverse(&u)?;
    let conj = &uinv * &h * &u;
    let scale = linalg::max_abs(&h).max(1.0);
    let herm = linalg::hermiticity_defect(&conj);
    if herm > 1e-10 * scale {
        return Err(TwoSpinError::Postcondition(format!("U⁻¹ĤU not hermitian ({herm:e})")));
    }
    let hr = hermitian_counterpart(p)?.h_r;
    let diff = linalg::max_abs_diff(&conj, &hr);
    if diff > 1e-10 * scale {
        return Err(TwoSpinError::Postcondition(format!("U⁻¹ĤU differs from H_R by {diff:e}")));
    }
    let rho = pseudoherm::metric_from_isomorphism(&u, &Metric::identity(4))?;
    let defect = pseudoherm::rho_hermiticity_defect(&h, rho.matrix());
    if defect > 1e-10 * scale * linalg::max_abs(rho.matrix()).max(1.0) {
        return Err(TwoSpinError::Postcondition(format!("Ĥ not ρ-hermitian ({defect:e})")));
    }
    Ok(Isomorphism { u, rho })
}

/// Precomputed `exp(−iHt)` for repeated evaluation.
///
/// Uses the eigendecomposition when the eigenvector matrix has condition
/// number below the cap and a scaled Taylor series otherwise.
#[derive(Debug, Clone)]
pub struct Propagator {
    h: CMatrix,
    spectral: Option<(Vec<Complex64>, CMatrix, CMatrix)>,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Self {
        let spectral = linalg::eigen(h).ok().and_then(|e| {
            let cond = e.vector_condition();
            if cond.is_finite() && cond < CONDITION_CAP {
                let sinv = linalg::inverse(&e.vectors).ok()?;
                Some((e.values, e.vectors, sinv))
            } else {
                None
            }
        });
        Self { h: h.clone(), spectral }
    }

    pub fn uses_eigenbasis(&self) -> bool {
        self.spectral.is_some()
    }

    pub fn matrix(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return linalg::identity(self.h.nrows());
        }
        match &self.spectral {
            Some((values, s, sinv)) => {
                let mut d = s.clone();
                for (k, lambda) in values.iter().enumerate() {
                    let phase = (c64(0.0, -t) * lambda).exp();
                    for i in 0..d.nrows() {
                        d[(i, k)] *= phase;
                    }
                }
                d * sinv
            }
            None => linalg::expm(&(&self.h * c64(0.0, -t))),
        }
    }

    pub fn apply(&self, t: f64, psi0: &CVector) -> CVector {
        self.matrix(t) * psi0
    }
}

/// `exp(−iHt) ψ₀`.
pub fn evolve(h: &CMatrix, t: f64, psi0: &CVector) -> CVector {
    Propagator::new(h).apply(t, psi0)
}

/// Amplitude `⟨ξ, e^{−iĤt}ζ⟩_ρ` evaluated directly and via the counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub amplitude: Complex64,
    pub amplitude_counterpart: Complex64,
    /// `|amplitude|² / (‖ξ‖²_ρ ‖ζ‖²_ρ)`.
    pub probability: f64,
    /// `‖e^{−iĤt}ζ‖_ρ`.
    pub rho_norm: f64,
    pub route_difference: f64,
}

/// Isomorphism for any parameters in the regime: the Eq.-(m) form on the
/// imaginary branch, the identity when `Ĥ` is already hermitian.
pub fn regime_isomorphism(p: &TwoSpinParams) -> Result<Isomorphism, TwoSpinError> {
    match paper_isomorphism(p) {
        Err(TwoSpinError::RealBranch) => Ok(Isomorphism {
            u: linalg::identity(4),
            rho: Metric::identity(4),
        }),
        other => other,
    }
}

/// Evaluator for transition amplitudes over many times.
pub struct TransitionEvaluator {
    iso: Isomorphism,
    uinv: CMatrix,
    direct: Propagator,
    counterpart: Propagator,
}

impl TransitionEvaluator {
    pub fn new(p: &TwoSpinParams) -> Result<Self, TwoSpinError> {
        let iso = regime_isomorphism(p)?;
        let uinv = linalg::inverse(&iso.u)?;
        let hr = hermitian_counterpart(p)?.h_r;
        Ok(Self {
            direct: Propagator::new(&build_total(p)),
            counterpart: Propagator::new(&hr),
            uinv,
            iso,
        })
    }

    pub fn isomorphism(&self) -> &Isomorphism {
        &self.iso
    }

    pub fn at(&self, xi: &CVector, zeta: &CVector, t: f64) -> Result<Transition, TwoSpinError> {
        let rho = &self.iso.rho;
        let evolved = self.direct.apply(t, zeta);
        let amplitude = pseudoherm::eta_inner(xi, &evolved, rho)?;
        let a = &self.uinv * xi;
        let b = self.counterpart.apply(t, &(&self.uinv * zeta));
        let amplitude_counterpart = a.dotc(&b);
        let nx = pseudoherm::eta_inner(xi, xi, rho)?.re;
        let nz = pseudoherm::eta_inner(zeta, zeta, rho)?.re;
        let ne = pseudoherm::eta_inner(&evolved, &evolved, rho)?.re;
        Ok(Transition {
            amplitude,
            amplitude_counterpart,
            probability: amplitude.norm_sqr() / (nx * nz),
            rho_norm: ne.max(0.0).sqrt(),
            route_difference: (amplitude - amplitude_counterpart).norm(),
        })
    }
}

pub fn transition_probability(
    xi: &CVector,
    zeta: &CVector,
    p: &TwoSpinParams,
    t: f64,
) -> Result<Transition, TwoSpinError> {
    TransitionEvaluator::new(p)?.at(xi, zeta, t)
}

/// One point of the decreasing-α sequence in [`canonical_limit_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitStep {
    pub im_f_minus: f64,
    pub det_relative_error: f64,
    pub h_distance: f64,
    pub h_r_distance: f64,
    pub u_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalLimitReport {
    pub steps: Vec<LimitStep>,
    /// `Ĥ = H_R` at `Im F₋ = 0`.
    pub limit_difference: f64,
    pub determinants_match: bool,
    pub monotone: bool,
    pub passed: bool,
}

/// Follows `Im F₋ ↦ Im F₋ / 2ᵏ`, `k = 0..steps`, keeping `F₊`, `Re F₋`, `J`.
///
/// Checks `det Ĥ = det H_R` at each point (1e−9 relative), `Ĥ = H_R` in the
/// limit, and monotone convergence of `Ĥ`, `H_R` and `U` to their limits.
pub fn canonical_limit_check(p: &TwoSpinParams, steps: usize) -> Result<CanonicalLimitReport, TwoSpinError> {
    require_regime(p)?;
    let base = p.with_im_f_minus(0.0);
    let h0 = build_total(&base);
    let hr0 = hermitian_counterpart(&base)?.h_r;
    let limit_difference = linalg::max_abs_diff(&h0, &hr0);
    let mut out = Vec::with_capacity(steps + 1);
    let im0 = p.f_minus().im;
    for k in 0..=steps {
        let q = p.with_im_f_minus(im0 / 2f64.powi(k as i32));
        let h = build_total(&q);
        let hr = hermitian_counterpart(&q)?.h_r;
        let iso = regime_isomorphism(&q)?;
        let dh = linalg::determinant(&h);
        let dhr = linalg::determinant(&hr);
        out.push(LimitStep {
            im_f_minus: q.f_minus().im,
            det_relative_error: (dh - dhr).norm() / dh.norm().max(dhr.norm()).max(f64::MIN_POSITIVE),
            h_distance: linalg::max_abs_diff(&h, &h0),
            h_r_distance: linalg::max_abs_diff(&hr, &hr0),
            u_distance: linalg::max_abs_diff(&iso.u, &linalg::identity(4)),
        });
    }
    let determinants_match = out
        .iter()
        .all(|s| s.det_relative_error <= 1e-9 || (s.det_relative_error.is_nan()));
    let monotone = out.windows(2).all(|w| {
        w[1].h_distance <= w[0].h_distance + 1e-15
            && w[1].h_r_distance <= w[0].h_r_distance + 1e-15
            && w[1].u_distance <= w[0].u_distance + 1e-15
    });
    let passed = determinants_match && monotone && limit_difference <= 1e-14;
    Ok(CanonicalLimitReport {
        steps: out,
        limit_difference,
        determinants_match,
        monotone,
        passed,
    })
}

/// One row of a regime sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub b: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub j: f64,
    pub report: RegimeReport,
}

pub const SWEEP_HEADER: &str =
    "B,alpha1,alpha2,J,ReE1p,ImE1p,ReE1m,ImE1m,ReE2p,ImE2p,ReE2m,ImE2m,pseudo_hermitian,threshold_margin";

/// CSV token for a float; non-finite values become `nan`, `inf`, `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x}")
    }
}

impl SweepRow {
    /// CSV line; eigenvalues are multiplied by `energy_scale` (4 for paper units).
    pub fn csv(&self, energy_scale: f64) -> String {
        let mut cols = vec![fmt_num(self.b), fmt_num(self.alpha1), fmt_num(self.alpha2), fmt_num(self.j)];
        for e in self.report.eigenvalues() {
            cols.push(fmt_num(e.re * energy_scale));
            cols.push(fmt_num(e.im * energy_scale));
        }
        cols.push(if self.report.pseudo_hermitian { "1" } else { "0" }.to_string());
        cols.push(fmt_num(self.report.threshold_margin));
        cols.join(",")
    }
}

/// Evaluates the Gilbert model on a grid of field amplitudes.
///
/// Points are processed on at most `workers` threads (0 means the rayon
/// default) and returned in grid order.
pub fn regime_sweep(
    b_values: &[f64],
    alpha1: f64,
    alpha2: f64,
    j: f64,
    workers: usize,
) -> Result<Vec<SweepRow>, TwoSpinError> {
    let eval = |&b: &f64| -> Result<SweepRow, TwoSpinError> {
        let p = TwoSpinParams::from_gilbert(&GilbertParams::new(b, alpha1, alpha2)?, j)?;
        Ok(SweepRow {
            b,
            alpha1,
            alpha2,
            j,
            report: closed_spectrum(&p),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TwoSpinError::InvalidParameter(e.to_string()))?;
    pool.install(|| b_values.par_iter().map(eval).collect())
}

/// Evenly spaced grid `start, start+step, …` up to and including `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, TwoSpinError> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(TwoSpinError::InvalidParameter("grid needs step > 0 and start <= stop".into()));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_of(m: &CMatrix) -> Vec<Complex64> {
        linalg::eigen(m).unwrap().values
    }

    #[test]
    fn single_spin_basic() {
        let h = build_single_spin(&z_field(c64(1.0, 0.0)), 1.0);
        assert!(linalg::max_abs_diff(&h, &CMatrix::from_diagonal(&CVector::from_vec(vec![c64(0.5, 0.0), c64(-0.5, 0.0)]))) < 1e-15);
    }

    #[test]
    fn single_spin_null_field_is_defective() {
        let h = build_single_spin(&[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, 0.0)], 1.0);
        let d = pseudoherm::diagnose(&h, 1e-9);
        assert!(!d.diagonalizable);
        let h = build_single_spin(&[c64(1.0, 0.0), c64(0.0, 0.999), c64(0.0, 0.0)], 1.0);
        let d = pseudoherm::diagnose(&h, 1e-9);
        assert!(d.real && d.diagonalizable);
    }

    #[test]
    fn free_entries() {
        let b = [0.3, -0.7, 1.1];
        let c = [0.9, 0.2, -0.4];
        let bf = [c64(b[0], 0.0), c64(b[1], 0.0), c64(b[2], 0.0)];
        let cf = [c64(c[0], 0.0), c64(c[1], 0.0), c64(c[2], 0.0)];
        let h = build_free(&bf, &cf);
        let i = c64(0.0, 1.0);
        let bm = c64(b[0], 0.0) - i * b[1];
        let bp = c64(b[0], 0.0) + i * b[1];
        let cm = c64(c[0], 0.0) - i * c[1];
        let cp = c64(c[0], 0.0) + i * c[1];
        let z = c64(0.0, 0.0);
        let r = |x: f64| c64(x, 0.0);
        let expected = CMatrix::from_row_slice(
            4,
            4,
            &[
                r(b[2] + c[2]), bm, cm, z,
                bp, r(c[2] - b[2]), z, cm,
                cp, z, r(-c[2] + b[2]), bm,
                z, cp, bp, r(-c[2] - b[2]),
            ],
        ) * c64(0.25, 0.0);
        assert!(linalg::max_abs_diff(&h, &expected) < 1e-15);
    }

    #[test]
    fn interaction_entries() {
        let (j1, j2, j3) = (0.5, -1.5, 2.0);
        let h = build_interaction(&[[j1, 0.0, 0.0], [0.0, j2, 0.0], [0.0, 0.0, j3]]);
        let r = |x: f64| c64(x, 0.0);
        let z = r(0.0);
        let expected = CMatrix::from_row_slice(
            4,
            4,
            &[
                r(j3), z, z, r(j1 - j2),
                z, r(-j3), r(j1 + j2), z,
                z, r(j1 + j2), r(-j3), z,
                r(j1 - j2), z, z, r(j3),
            ],
        ) * c64(0.25, 0.0);
        assert!(linalg::max_abs_diff(&h, &expected) < 1e-15);
    }

    #[test]
    fn heisenberg_spectrum() {
        let j = 1.7;
        let mut ev = linalg::hermitian_eigenvalues(&build_interaction(&isotropic(j)));
        ev.sort_by(|a, b| a.total_cmp(b));
        let expected = [-3.0 * j / 4.0, j / 4.0, j / 4.0, j / 4.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn total_decoupled() {
        let h = build_total(&TwoSpinParams::new(c64(1.0, 0.0), c64(1.0, 0.0), 0.0).unwrap());
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(0.5, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-0.5, 0.0)]));
        assert!(linalg::max_abs_diff(&h, &d) < 1e-15);
    }

    #[test]
    fn total_block_structure() {
        let p = TwoSpinParams::new(c64(0.7, 0.3), c64(-0.2, 1.1), 0.9).unwrap();
        let h = build_total(&p);
        let (fp, fm, j) = (p.f_plus(), p.f_minus(), c64(p.j, 0.0));
        assert!((h[(0, 0)] - (fp + j) / 4.0).norm() < 1e-15);
        assert!((h[(3, 3)] - (-fp + j) / 4.0).norm() < 1e-15);
        assert!((h[(1, 1)] - (-fm - j) / 4.0).norm() < 1e-15);
        assert!((h[(2, 2)] - (fm - j) / 4.0).norm() < 1e-15);
        assert!((h[(1, 2)] - j / 2.0).norm() < 1e-15);
        assert!((h[(2, 1)] - j / 2.0).norm() < 1e-15);
    }

    #[test]
    fn closed_matches_eigensolver() {
        let p = TwoSpinParams::new(c64(0.4, -0.8), c64(1.3, 0.2), -0.6).unwrap();
        let r = closed_spectrum(&p);
        let d = linalg::spectrum_distance(&r.eigenvalues(), &spec_of(&build_total(&p)));
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn gilbert_examples() {
        let (f, g) = gilbert_fields(&GilbertParams::new(1.0, 1.0, -1.0).unwrap()).unwrap();
        assert!((f - c64(0.5, 0.5)).norm() < 1e-15);
        assert!((g - c64(0.5, -0.5)).norm() < 1e-15);
        let (f, g) = gilbert_fields(&GilbertParams::new(2.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((f, g), (c64(2.0, 0.0), c64(2.0, 0.0)));
        assert!(GilbertParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn thresholds() {
        assert!((damping_threshold(1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((damping_threshold(1.0, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!(damping_threshold(1.0, 0.0).is_err());
        assert!(damping_threshold(0.0, 1.0).is_err());
    }

    #[test]
    fn toy_counterpart_values() {
        let p = TwoSpinParams::toy(1.0, 1.0, 1.0).unwrap();
        let c = hermitian_counterpart(&p).unwrap();
        assert!((c.j_tilde[0] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((c.j_tilde[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(c.j_tilde[2], 1.0);
        assert!((c.b3 - 0.5).abs() < 1e-15 && (c.c3 - 0.5).abs() < 1e-15);
        assert!(linalg::hermiticity_defect(&c.h_r) < 1e-15);
    }

    #[test]
    fn toy_isomorphism_values() {
        let p = TwoSpinParams::toy(1.0, 1.0, 1.0).unwrap();
        let iso = paper_isomorphism(&p).unwrap();
        assert!((iso.u[(1, 1)] - c64(3f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
        assert!((iso.u[(1, 2)] - c64(0.0, -0.5)).norm() < 1e-15);
        assert!((iso.rho.matrix()[(2, 2)] - c64(4.0 / 3.0, 0.0)).norm() < 1e-12);
        assert!((iso.rho.matrix()[(1, 1)] - c64(4.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn isomorphism_negative_coupling() {
        let p = TwoSpinParams::toy(-1.0, 1.0, 1.0).unwrap();
        let iso = paper_isomorphism(&p).unwrap();
        let hr = hermitian_counterpart(&p).unwrap();
        let uinv = linalg::inverse(&iso.u).unwrap();
        assert!(linalg::max_abs_diff(&(uinv * build_total(&p) * &iso.u), &hr.h_r) < 1e-12);
    }

    #[test]
    fn isomorphism_rejections() {
        let beyond = TwoSpinParams::toy(1.0, 3.0, 0.5).unwrap();
        assert!(matches!(paper_isomorphism(&beyond), Err(TwoSpinError::NotPseudoHermitian(_))));
        let real = TwoSpinParams::new(c64(1.0, 0.0), c64(0.3, 0.0), 1.0).unwrap();
        assert_eq!(paper_isomorphism(&real).unwrap_err(), TwoSpinError::RealBranch);
        let iso = regime_isomorphism(&real).unwrap();
        assert_eq!(iso.u, linalg::identity(4));
        let equal = TwoSpinParams::new(c64(1.0, 0.0), c64(1.0, 0.0), 0.0).unwrap();
        assert_eq!(paper_isomorphism(&equal).unwrap().u, linalg::identity(4));
    }

    #[test]
    fn exceptional_point_is_not_pseudo_hermitian() {
        let p = TwoSpinParams::toy(1.0, 2.5, 0.5).unwrap();
        let r = closed_spectrum(&p);
        assert!(!r.pseudo_hermitian);
        assert!(r.threshold_margin.abs() < 1e-12);
        let d = pseudoherm::diagnose(&build_total(&p), 1e-9);
        assert!(!d.diagonalizable);
    }

    #[test]
    fn propagator_paths_agree() {
        let p = TwoSpinParams::toy(1.0, 1.0, 0.5).unwrap();
        let h = build_total(&p);
        let prop = Propagator::new(&h);
        assert!(prop.uses_eigenbasis());
        let taylor = linalg::expm(&(&h * c64(0.0, -3.7)));
        assert!(linalg::max_abs_diff(&prop.matrix(3.7), &taylor) < 1e-12);
    }

    #[test]
    fn grid_inclusive() {
        let g = grid(2.4, 2.6, 0.01).unwrap();
        assert_eq!(g.len(), 21);
        assert!((g[20] - 2.6).abs() < 1e-12);
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn csv_tokens() {
        let p = TwoSpinParams::new(c64(1.0, 0.0), c64(0.0, 1.0), 1.0).unwrap();
        let row = SweepRow {
            b: 1.0,
            alpha1: 0.0,
            alpha2: 0.0,
            j: 1.0,
            report: closed_spectrum(&p),
        };
        let line = row.csv(1.0);
        assert_eq!(line.split(',').count(), SWEEP_HEADER.split(',').count());
        assert!(line.ends_with(",0,nan"));
    }
}
