//! Subcommand bodies. Each returns the rendered output and its status.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use gquant::grassmann::{AlgebraSpec, GrassmannElement};
use gquant::linalg::{self, CVector};
use gquant::twospin::{self, fmt_num, GilbertParams, TwoSpinParams};
use gquant::verify::{self, Fault, VerifyOptions};
use gquant::{io, quantize};

use crate::config::{Format, RunConfig};
use crate::{CliError, Outcome};

const DEFAULT_J: f64 = 1.0;
const DEFAULT_B: f64 = 1.0;
const DEFAULT_ALPHA1: f64 = 1.0;
const DEFAULT_ALPHA2: f64 = -1.0;

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn gilbert(cfg: &RunConfig) -> Result<(GilbertParams, f64), CliError> {
    let g = GilbertParams::new(
        cfg.b.unwrap_or(DEFAULT_B),
        cfg.alpha1.unwrap_or(DEFAULT_ALPHA1),
        cfg.alpha2.unwrap_or(DEFAULT_ALPHA2),
    )
    .map_err(invalid)?;
    let j = cfg.j.unwrap_or(DEFAULT_J);
    if !j.is_finite() {
        return Err(invalid("J must be finite"));
    }
    Ok((g, j))
}

fn params(cfg: &RunConfig) -> Result<(GilbertParams, f64, TwoSpinParams), CliError> {
    let (g, j) = gilbert(cfg)?;
    let p = TwoSpinParams::from_gilbert(&g, j).map_err(invalid)?;
    Ok((g, j, p))
}

/// `n` evenly spaced points from `lo` to `hi` inclusive; `n = 1` gives `[lo]`.
pub fn linspace(name: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(invalid(format!("{name}: need at least one grid point")));
    }
    if !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(invalid(format!("{name}: need finite bounds with min <= max, got [{lo}, {hi}]")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + k as f64 * step }).collect())
}

fn c_json(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

const SPECTRUM_NAMES: [&str; 4] = ["E1p", "E1m", "E2p", "E2m"];

/// Pairs each closed-form eigenvalue with the nearest unused numerical one.
fn match_spectrum(closed: &[Complex64], numeric: &[Complex64]) -> Vec<Complex64> {
    let mut used = vec![false; numeric.len()];
    closed
        .iter()
        .map(|c| {
            let k = (0..numeric.len())
                .filter(|&k| !used[k])
                .min_by(|&a, &b| (numeric[a] - c).norm().total_cmp(&(numeric[b] - c).norm()))
                .expect("spectra have equal length");
            used[k] = true;
            numeric[k]
        })
        .collect()
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let tol = cfg.tol()?;
    let (g, j, p) = params(cfg)?;
    let report = twospin::closed_spectrum(&p);
    let closed = report.eigenvalues();
    let numeric = linalg::eigen(&twospin::build_total(&p)).map_err(invalid)?.values;
    let matched = match_spectrum(&closed, &numeric);
    let discrepancy = closed
        .iter()
        .zip(&matched)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
    let s = cfg.energy_scale();
    let status = if discrepancy <= tol { 0 } else { 2 };
    if status != 0 {
        eprintln!("spectrum discrepancy {discrepancy:e} exceeds tolerance {tol:e}");
    }
    let body = match cfg.format() {
        Format::Csv => {
            let mut out = String::from(
                "name,re_closed,im_closed,re_numeric,im_numeric,pseudo_hermitian,threshold_margin,max_discrepancy\n",
            );
            for (k, name) in SPECTRUM_NAMES.iter().enumerate() {
                let (c, n) = (closed[k] * s, matched[k] * s);
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{},{},{},{}",
                    fmt_num(c.re),
                    fmt_num(c.im),
                    fmt_num(n.re),
                    fmt_num(n.im),
                    u8::from(report.pseudo_hermitian),
                    fmt_num(report.threshold_margin),
                    fmt_num(discrepancy * s)
                );
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = SPECTRUM_NAMES
                .iter()
                .enumerate()
                .map(|(k, name)| json!({"name": name, "closed": c_json(closed[k] * s), "numeric": c_json(matched[k] * s)}))
                .collect();
            let v = json!({
                "B": g.b, "alpha1": g.alpha1, "alpha2": g.alpha2, "J": j,
                "energy_scale": s,
                "eigenvalues": rows,
                "max_discrepancy": discrepancy * s,
                "f_plus": c_json(report.f_plus),
                "f_minus": c_json(report.f_minus),
                "pseudo_hermitian": report.pseudo_hermitian,
                "threshold_margin": report.threshold_margin,
            });
            serde_json::to_string_pretty(&v).map_err(invalid)? + "\n"
        }
    };
    Ok(Outcome { body, status })
}

enum Outer {
    Fixed,
    Alpha(Vec<f64>),
    Coupling(Vec<f64>),
}

fn sweep_axes(cfg: &RunConfig) -> Result<(Vec<f64>, Outer), CliError> {
    let b_lo = cfg.b_min.or(cfg.b).unwrap_or(DEFAULT_B);
    let b_hi = cfg.b_max.unwrap_or(b_lo);
    let b_n = cfg.b_points.unwrap_or(if b_hi == b_lo { 1 } else { 101 });
    let bs = linspace("B", b_lo, b_hi, b_n)?;
    if bs[0] <= 0.0 {
        return Err(invalid("B grid must be positive"));
    }
    let alpha_set = cfg.alpha_min.is_some() || cfg.alpha_max.is_some() || cfg.alpha_points.is_some();
    let j_set = cfg.j_min.is_some() || cfg.j_max.is_some() || cfg.j_points.is_some();
    let outer = match (alpha_set, j_set) {
        (true, true) => return Err(invalid("sweep either alpha or J, not both")),
        (true, false) => {
            let lo = cfg.alpha_min.unwrap_or(0.0);
            let hi = cfg.alpha_max.unwrap_or(lo);
            Outer::Alpha(linspace("alpha", lo, hi, cfg.alpha_points.unwrap_or(1))?)
        }
        (false, true) => {
            let lo = cfg.j_min.or(cfg.j).unwrap_or(DEFAULT_J);
            let hi = cfg.j_max.unwrap_or(lo);
            Outer::Coupling(linspace("J", lo, hi, cfg.j_points.unwrap_or(1))?)
        }
        (false, false) => Outer::Fixed,
    };
    Ok((bs, outer))
}

pub fn cmd_regime_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (bs, outer) = sweep_axes(cfg)?;
    let a1 = cfg.alpha1.unwrap_or(DEFAULT_ALPHA1);
    let a2 = cfg.alpha2.unwrap_or(DEFAULT_ALPHA2);
    let j = cfg.j.unwrap_or(DEFAULT_J);
    let workers = cfg.workers.unwrap_or(0);
    let runs: Vec<(f64, f64, f64)> = match outer {
        Outer::Fixed => vec![(a1, a2, j)],
        Outer::Alpha(v) => v.into_iter().map(|a| (a, -a, j)).collect(),
        Outer::Coupling(v) => v.into_iter().map(|jj| (a1, a2, jj)).collect(),
    };
    let mut rows = Vec::with_capacity(runs.len() * bs.len());
    for (a1, a2, j) in runs {
        rows.extend(twospin::regime_sweep(&bs, a1, a2, j, workers).map_err(invalid)?);
    }
    let s = cfg.energy_scale();
    let body = match cfg.format() {
        Format::Csv => {
            let mut out = String::with_capacity(rows.len() * 160);
            out.push_str(twospin::SWEEP_HEADER);
            out.push('\n');
            for r in &rows {
                out.push_str(&r.csv(s));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let keys: Vec<&str> = twospin::SWEEP_HEADER.split(',').collect();
            let v: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    let e = r.report.eigenvalues();
                    let nums = [
                        r.b, r.alpha1, r.alpha2, r.j, e[0].re * s, e[0].im * s, e[1].re * s, e[1].im * s,
                        e[2].re * s, e[2].im * s, e[3].re * s, e[3].im * s,
                    ];
                    for (k, x) in keys.iter().zip(nums) {
                        m.insert((*k).to_string(), json!(x));
                    }
                    m.insert("pseudo_hermitian".into(), json!(u8::from(r.report.pseudo_hermitian)));
                    m.insert("threshold_margin".into(), json!(r.report.threshold_margin));
                    Value::Object(m)
                })
                .collect();
            serde_json::to_string_pretty(&v).map_err(invalid)? + "\n"
        }
    };
    Ok(Outcome::ok(body))
}

fn basis(i: usize) -> Result<CVector, CliError> {
    if i >= 4 {
        return Err(invalid(format!("basis index {i} out of range 0..4")));
    }
    let mut v = CVector::zeros(4);
    v[i] = Complex64::new(1.0, 0.0);
    Ok(v)
}

struct EvolveRow {
    t: f64,
    amp: Complex64,
    probability: f64,
    rho_norm: f64,
    canonical_norm: Option<f64>,
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, _, p) = params(cfg)?;
    let t0 = cfg.t_start.unwrap_or(0.0);
    let t1 = cfg.t_end.unwrap_or(10.0);
    let ts = linspace("t", t0, t1, cfg.t_points.unwrap_or(101))?;
    let zeta = basis(cfg.initial.unwrap_or(1))?;
    let xi = basis(cfg.target.unwrap_or(2))?;
    // Paper units scale the Hamiltonian by 4, which is the same as scaling time.
    let clock = cfg.energy_scale();
    let regime = twospin::closed_spectrum(&p);
    let dissipative = !regime.pseudo_hermitian;
    if dissipative && !cfg.allow_dissipative.unwrap_or(false) {
        return Err(invalid(format!(
            "no positive metric: 4J^2 + F-^2 = {} (F+ = {}); pass --allow-dissipative to evolve anyway",
            fmt_num(regime.threshold_margin),
            regime.f_plus
        )));
    }
    let mut rows = Vec::with_capacity(ts.len());
    if dissipative {
        let prop = twospin::Propagator::new(&twospin::build_total(&p));
        let norms = xi.norm_squared() * zeta.norm_squared();
        for &t in &ts {
            let psi = prop.apply(clock * t, &zeta);
            let amp = xi.dotc(&psi);
            rows.push(EvolveRow {
                t,
                amp,
                probability: amp.norm_sqr() / norms,
                rho_norm: f64::NAN,
                canonical_norm: Some(psi.norm()),
            });
        }
    } else {
        let eval = twospin::TransitionEvaluator::new(&p).map_err(invalid)?;
        for &t in &ts {
            let tr = eval.at(&xi, &zeta, clock * t).map_err(invalid)?;
            rows.push(EvolveRow {
                t,
                amp: tr.amplitude,
                probability: tr.probability,
                rho_norm: tr.rho_norm,
                canonical_norm: None,
            });
        }
    }
    let body = match cfg.format() {
        Format::Csv => {
            let mut out = String::from("t,re_amp,im_amp,probability,rho_norm");
            out.push_str(if dissipative { ",canonical_norm\n" } else { "\n" });
            for r in &rows {
                let _ = write!(
                    out,
                    "{},{},{},{},{}",
                    fmt_num(r.t),
                    fmt_num(r.amp.re),
                    fmt_num(r.amp.im),
                    fmt_num(r.probability),
                    fmt_num(r.rho_norm)
                );
                if let Some(c) = r.canonical_norm {
                    let _ = write!(out, ",{}", fmt_num(c));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut o = json!({
                        "t": r.t, "re_amp": r.amp.re, "im_amp": r.amp.im,
                        "probability": r.probability, "rho_norm": r.rho_norm,
                    });
                    if let Some(c) = r.canonical_norm {
                        o["canonical_norm"] = json!(c);
                    }
                    o
                })
                .collect();
            serde_json::to_string_pretty(&v).map_err(invalid)? + "\n"
        }
    };
    Ok(Outcome::ok(body))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationDoc {
    families: Vec<usize>,
    #[serde(default)]
    hbar: Option<f64>,
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("reading {}: {e}", path.display())))
}

pub fn cmd_quantize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let tol = cfg.tol()?;
    let path = cfg.element.as_ref().ok_or_else(|| invalid("quantize-file needs --element"))?;
    let f = GrassmannElement::from_json(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let (families, file_hbar) = match &cfg.realization {
        Some(rp) => {
            let doc: RealizationDoc =
                serde_json::from_str(&read(rp)?).map_err(|e| invalid(format!("{}: {e}", rp.display())))?;
            (doc.families, doc.hbar)
        }
        None => (f.algebra().family_sizes().to_vec(), None),
    };
    let hbar = cfg.hbar.or(file_hbar).unwrap_or(1.0);
    if families != f.algebra().family_sizes() {
        return Err(invalid(format!(
            "realization families {:?} do not match the element's algebra {:?}",
            families,
            f.algebra().family_sizes()
        )));
    }
    let spec = AlgebraSpec::new(families, false).map_err(invalid)?;
    let r = quantize::tensor_realization(&spec, hbar).map_err(invalid)?;
    let q = quantize::quantize(&f, &r).map_err(invalid)?;
    let mut status = 0;
    if cfg.check.unwrap_or(false) {
        if f.is_star_real(tol) {
            let defect = linalg::hermiticity_defect(&q);
            let bound = tol * linalg::max_abs(&q).max(1.0);
            if defect <= bound {
                eprintln!("check: star-real element, hermiticity defect {defect:e}");
            } else {
                eprintln!("check FAILED: star-real element, hermiticity defect {defect:e} > {bound:e}");
                status = 2;
            }
        } else {
            eprintln!("check skipped: element is not star-real");
        }
    }
    Ok(Outcome {
        body: io::matrix_to_json(&q) + "\n",
        status,
    })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = VerifyOptions {
        seed: cfg.seed.unwrap_or(0),
        groups: cfg.group.clone().unwrap_or_default(),
        fault: cfg.inject_fault.unwrap_or(false).then_some(Fault::PerturbGenerator),
    };
    let report = verify::run(&opts).map_err(invalid)?;
    for g in &report.groups {
        eprintln!("{} {} ({})", if g.passed { "PASS" } else { "FAIL" }, g.name, g.module);
        for c in g.checks.iter().filter(|c| !c.passed) {
            eprintln!(
                "    {}: {:e} vs {:e}{}",
                c.name,
                c.value,
                c.tol,
                c.detail.as_deref().map(|d| format!(" [{d}]")).unwrap_or_default()
            );
        }
    }
    Ok(Outcome {
        body: report.to_json() + "\n",
        status: if report.passed { 0 } else { 2 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let v = linspace("B", 2.4, 2.6, 21).unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 2.4);
        assert_eq!(v[20], 2.6);
        assert!((v[10] - 2.5).abs() < 1e-15);
        assert_eq!(linspace("B", 1.0, 1.0, 1).unwrap(), vec![1.0]);
        assert!(linspace("B", 1.0, 0.0, 3).is_err());
        assert!(linspace("B", 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn matching_is_a_permutation() {
        let c = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let n = [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 1e-9), Complex64::new(1.0, -1e-9)];
        let m = match_spectrum(&c, &n);
        assert_eq!(m[2], n[0]);
        assert_ne!(m[0], m[1]);
    }
}
