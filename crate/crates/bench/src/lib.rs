//! Fixed inputs for the benchmarks.

use gquant::grassmann::{AlgebraSpec, GrassmannElement};
use gquant::linalg::CMatrix;
use gquant::verify;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn two_families() -> AlgebraSpec {
    AlgebraSpec::new(vec![3, 3], false).expect("valid algebra")
}

/// Deterministic random elements of degree at most `max_degree`.
pub fn elements(a: &AlgebraSpec, count: usize, max_degree: usize, seed: u64) -> Vec<GrassmannElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| verify::random_element(&mut rng, a, max_degree)).collect()
}

pub fn matrices(n: usize, count: usize, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| verify::random_well_conditioned(&mut rng, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let a = two_families();
        assert_eq!(elements(&a, 4, 3, 7), elements(&a, 4, 3, 7));
        assert_eq!(matrices(4, 2, 7), matrices(4, 2, 7));
    }
}
