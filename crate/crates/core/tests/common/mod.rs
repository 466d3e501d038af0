#![allow(dead_code)]

use gquant::grassmann::{AlgebraSpec, Generator, GrassmannElement};
use gquant::linalg::{c64, CMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

pub type RawTerm = (Vec<usize>, f64, f64);

/// Raw terms over `n` generators: index sets of size ≤ `max_deg` with
/// coefficients in the unit box.
pub fn raw_terms(n: usize, max_deg: usize) -> impl Strategy<Value = Vec<RawTerm>> {
    prop::collection::vec(
        (
            prop::collection::btree_set(0..n, 0..=max_deg.min(n)).prop_map(|s| s.into_iter().collect::<Vec<_>>()),
            -1.0..1.0f64,
            -1.0..1.0f64,
        ),
        0..6,
    )
}

pub fn build(a: &AlgebraSpec, raw: &[RawTerm]) -> GrassmannElement {
    let gens = a.generators();
    GrassmannElement::canonicalize(
        a,
        raw.iter()
            .map(|(idx, re, im)| (idx.iter().map(|&i| gens[i]).collect::<Vec<Generator>>(), c64(*re, *im))),
    )
    .unwrap()
}

/// Keeps only terms of the given degree parity (a definite grading for one family).
pub fn with_parity(a: &AlgebraSpec, raw: &[RawTerm], odd: bool) -> GrassmannElement {
    let kept: Vec<RawTerm> = raw.iter().filter(|(s, _, _)| (s.len() % 2 == 1) == odd).cloned().collect();
    build(a, &kept)
}

pub fn star_real(f: &GrassmannElement) -> GrassmannElement {
    (f + &f.star()).scale(c64(0.5, 0.0))
}

pub fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| c64(re, im))
}

/// `I + M/2` with entries of `M` in the unit box, rejected above condition 50.
pub fn well_conditioned(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), n * n)
        .prop_map(move |v| {
            CMatrix::from_fn(n, n, |i, j| {
                let (re, im) = v[i * n + j];
                c64(re, im) + if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) }
            })
        })
        .prop_filter("well conditioned", |m| gquant::linalg::condition_number(m) < 50.0)
}
