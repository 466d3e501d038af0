mod common;

use common::*;
use gquant::linalg::{self, c64, CVector};
use gquant::pseudoherm;
use gquant::twospin::{self, GilbertParams, TwoSpinParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = TwoSpinParams> {
    (complex(), complex(), -2.0..2.0f64).prop_map(|(f, g, j)| TwoSpinParams::new(f, g, j).unwrap())
}

fn gilbert() -> impl Strategy<Value = TwoSpinParams> {
    (0.05..6.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(b, a1, a2, j)| TwoSpinParams::from_gilbert(&GilbertParams::new(b, a1, a2).unwrap(), j).unwrap())
}

/// Toy model strictly inside the regime: B = u·B_max with u < 1.
fn toy_in_regime() -> impl Strategy<Value = TwoSpinParams> {
    (0.2..2.0f64, 0.1..2.0f64, 0.05..0.95f64, any::<bool>()).prop_map(|(j, alpha, u, neg)| {
        let b = u * twospin::damping_threshold(j, alpha).unwrap();
        let j = if neg { -j } else { j };
        TwoSpinParams::toy(j, b, alpha).unwrap()
    })
}

fn spectrum(m: &gquant::linalg::CMatrix) -> Vec<Complex64> {
    linalg::eigen(m).unwrap().values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_eigensolver(p in params()) {
        let closed = twospin::closed_spectrum(&p).eigenvalues();
        prop_assert!(linalg::spectrum_distance(&closed, &spectrum(&twospin::build_total(&p))) < 1e-10);
    }

    #[test]
    fn regime_flag_matches_diagnosis(p in gilbert()) {
        let closed = twospin::closed_spectrum(&p);
        let diag = pseudoherm::diagnose(&twospin::build_total(&p), pseudoherm::DEFAULT_REALITY_TOL);
        prop_assert_eq!(closed.pseudo_hermitian, diag.is_pseudo_hermitian());
    }

    #[test]
    fn counterpart_preserves_spectrum_and_determinant(p in toy_in_regime()) {
        let h = twospin::build_total(&p);
        let hr = twospin::hermitian_counterpart(&p).unwrap().h_r;
        prop_assert!(linalg::hermiticity_defect(&hr) == 0.0);
        prop_assert!(linalg::spectrum_distance(&spectrum(&h), &linalg::hermitian_eigenvalues(&hr).iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>()) < 1e-10);
        let (dh, dr) = (linalg::determinant(&h), linalg::determinant(&hr));
        prop_assert!((dh - dr).norm() <= 1e-9 * dh.norm().max(1e-3));
    }

    #[test]
    fn rho_norm_is_conserved(p in toy_in_regime(), z in prop::collection::vec(complex(), 4)) {
        let eval = twospin::TransitionEvaluator::new(&p).unwrap();
        let zeta = CVector::from_vec(z);
        let xi = zeta.clone();
        let n0 = eval.at(&xi, &zeta, 0.0).unwrap().rho_norm;
        for k in 0..=100 {
            let tr = eval.at(&xi, &zeta, k as f64).unwrap();
            prop_assert!((tr.rho_norm - n0).abs() < 1e-9 * n0.max(1.0));
            prop_assert!(tr.route_difference < 1e-9 * n0.max(1.0).powi(2));
        }
    }

    #[test]
    fn decoupled_spectrum_is_a_minkowski_sum(f in complex(), g in complex()) {
        let p = TwoSpinParams::new(f, g, 0.0).unwrap();
        let z = |v: Complex64| [c64(0.0, 0.0), c64(0.0, 0.0), v];
        let sg = spectrum(&twospin::build_single_spin(&z(g), 0.5));
        let sf = spectrum(&twospin::build_single_spin(&z(f), 0.5));
        let sums: Vec<Complex64> = sg.iter().flat_map(|a| sf.iter().map(move |b| a + b)).collect();
        prop_assert!(linalg::spectrum_distance(&sums, &spectrum(&twospin::build_total(&p))) < 1e-12);
    }

    #[test]
    fn isomorphism_conjugates_to_counterpart(p in toy_in_regime()) {
        let iso = twospin::paper_isomorphism(&p).unwrap();
        let h = twospin::build_total(&p);
        let uinv = linalg::inverse(&iso.u).unwrap();
        let hr = twospin::hermitian_counterpart(&p).unwrap().h_r;
        prop_assert!(linalg::max_abs_diff(&(&uinv * &h * &iso.u), &hr) < 1e-10);
        prop_assert!(iso.rho.min_eigenvalue() > 0.0);
        prop_assert!(pseudoherm::rho_hermiticity_defect(&h, iso.rho.matrix()) < 1e-10);
    }
}

#[test]
fn threshold_is_sharp_and_growth_is_monotone() {
    for (j, alpha) in [(1.0, 0.5), (0.5, 1.0), (2.0, 0.3)] {
        let bmax = twospin::damping_threshold(j, alpha).unwrap();
        let imag = |b: f64| {
            let h = twospin::build_total(&TwoSpinParams::toy(j, b, alpha).unwrap());
            spectrum(&h).iter().fold(0.0_f64, |a, z| a.max(z.im.abs()))
        };
        for k in 1..100 {
            assert!(imag(bmax * k as f64 / 100.0) <= 1e-10);
        }
        let above: Vec<f64> = (1..=20).map(|k| imag(bmax * (1.0 + 0.05 * k as f64))).collect();
        assert!(above[0] > 0.0);
        assert!(above.windows(2).all(|w| w[1] > w[0]), "{above:?}");
    }
}

#[test]
fn exceptional_point_is_not_diagonalizable() {
    let p = TwoSpinParams::toy(1.0, 2.5, 0.5).unwrap();
    let report = twospin::closed_spectrum(&p);
    assert!(!report.pseudo_hermitian);
    assert!(report.threshold_margin.abs() < 1e-12);
    let d = pseudoherm::diagnose(&twospin::build_total(&p), pseudoherm::DEFAULT_REALITY_TOL);
    assert!(!d.diagonalizable);
    assert!(d.metric.is_none());
}

#[test]
fn canonical_limit_converges() {
    let p = TwoSpinParams::toy(1.0, 1.0, 1.0).unwrap();
    let rep = twospin::canonical_limit_check(&p, 30).unwrap();
    assert!(rep.passed);
    assert!(rep.determinants_match);
    assert!(rep.monotone);
}

#[test]
fn sweep_rows_follow_grid_order() {
    let bs = twospin::grid(0.1, 3.0, 0.1).unwrap();
    let rows = twospin::regime_sweep(&bs, 0.5, -0.5, 1.0, 3).unwrap();
    assert_eq!(rows.len(), bs.len());
    assert!(rows.iter().zip(&bs).all(|(r, b)| r.b == *b));
    let serial = twospin::regime_sweep(&bs, 0.5, -0.5, 1.0, 1).unwrap();
    assert_eq!(rows, serial);
}
