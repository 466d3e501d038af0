mod common;

use common::*;
use gquant::linalg::{self, c64, CMatrix, CVector};
use gquant::pseudoherm::{self, Metric};
use num_complex::Complex64;
use proptest::prelude::*;

fn planted(t: &CMatrix, d: &[Complex64]) -> CMatrix {
    let tinv = linalg::inverse(t).unwrap();
    t * CMatrix::from_diagonal(&CVector::from_vec(d.to_vec())) * tinv
}

/// Four reals separated by at least 0.5.
fn separated_reals() -> impl Strategy<Value = Vec<Complex64>> {
    prop::array::uniform4(0.0..1.0f64).prop_map(|u| (0..4).map(|k| c64(-3.0 + 1.5 * k as f64 + u[k], 0.0)).collect())
}

fn vector(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec(complex(), n).prop_map(CVector::from_vec)
}

fn positive_metric() -> impl Strategy<Value = Metric> {
    well_conditioned(4).prop_map(|m| Metric::new(&m * m.adjoint()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_renders_planted_real_spectrum_hermitian(t in well_conditioned(4), d in separated_reals()) {
        let a = planted(&t, &d);
        let diag = pseudoherm::diagnose(&a, pseudoherm::DEFAULT_REALITY_TOL);
        prop_assert!(diag.is_pseudo_hermitian());
        let rho = diag.metric.clone().unwrap();
        prop_assert!(linalg::hermiticity_defect(&rho) < 1e-12);
        prop_assert!(linalg::hermitian_eigenvalues(&rho)[0] > 0.0);
        prop_assert!(pseudoherm::rho_hermiticity_defect(&a, &rho) < 1e-10);
        // The ρ-adjoint of a ρ-hermitian operator is the operator itself, up to
        // the residual amplified by ρ⁻¹.
        let m = Metric::new(rho).unwrap();
        let diff = linalg::max_abs_diff(&pseudoherm::rho_adjoint(&a, &m).unwrap(), &a);
        prop_assert!(diff < 1e-10 * linalg::condition_number(m.matrix()));
    }

    #[test]
    fn complex_pairs_have_no_metric(t in well_conditioned(4), x in -2.0..2.0f64, y in 0.05..2.0f64, r in prop::array::uniform2(-2.0..2.0f64)) {
        let a = planted(&t, &[c64(x, y), c64(x, -y), c64(r[0], 0.0), c64(r[1], 0.0)]);
        let diag = pseudoherm::diagnose(&a, pseudoherm::DEFAULT_REALITY_TOL);
        prop_assert!(!diag.real);
        prop_assert!(diag.metric.is_none());
    }

    #[test]
    fn isometry_transports_matrix_elements(u in well_conditioned(4), a in well_conditioned(4), eta in positive_metric(), x in vector(4), y in vector(4)) {
        let rho = pseudoherm::metric_from_isomorphism(&u, &eta).unwrap();
        let uinv = linalg::inverse(&u).unwrap();
        let moved = &u * &a * &uinv;
        let lhs = pseudoherm::eta_inner(&(&u * &x), &(moved * (&u * &y)), &rho).unwrap();
        let rhs = pseudoherm::eta_inner(&x, &(&a * &y), &eta).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn diagnosis_is_similarity_covariant(t in well_conditioned(4), s in well_conditioned(4), d in separated_reals(), y in 0.0..1.0f64) {
        // y = 0 keeps the spectrum real; otherwise one conjugate pair appears.
        let mut d = d;
        if y > 0.5 {
            d[0] = c64(d[0].re, y);
            d[1] = c64(d[0].re, -y);
        }
        let a = planted(&t, &d);
        let sinv = linalg::inverse(&s).unwrap();
        let b = &s * &a * &sinv;
        let da = pseudoherm::diagnose(&a, pseudoherm::DEFAULT_REALITY_TOL);
        let db = pseudoherm::diagnose(&b, pseudoherm::DEFAULT_REALITY_TOL);
        prop_assert_eq!(da.real, db.real);
        prop_assert_eq!(da.metric.is_some(), db.metric.is_some());
        prop_assert!(linalg::spectrum_distance(&da.eigenvalues(), &db.eigenvalues()) < 1e-9);
    }
}

#[test]
fn jordan_block_is_flagged() {
    let a = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
    let d = pseudoherm::diagnose(&a, pseudoherm::DEFAULT_REALITY_TOL);
    assert!(d.real);
    assert!(!d.diagonalizable);
    assert!(d.metric.is_none());
}
