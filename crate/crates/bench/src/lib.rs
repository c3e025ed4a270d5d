//! Workloads shared by the benchmarks.

use morsefam::algebra::IntMatrix;
use morsefam::family::FamilyDescriptor;
use morsefam::library::{fiber_from_complex, flat_family, FlatBase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Square matrix with entries in `-9..=9`.
pub fn random_matrix(n: usize, seed: u64) -> IntMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-9..=9)).collect())
        .collect();
    IntMatrix::from_rows(&rows)
}

/// Flat family over the torus whose fiber is `k` circles joined by `∂ = 2` on one of them,
/// with monodromy cycling the circles.
pub fn wide_torus_family(k: usize) -> FamilyDescriptor {
    let mut d1 = IntMatrix::zeros(k, k);
    d1[(0, 0)] = 2.into();
    let fiber = fiber_from_complex(&[k, k], &[IntMatrix::zeros(0, k), d1]);
    let mut shift = IntMatrix::zeros(2 * k, 2 * k);
    for b in [0, k] {
        for c in 0..k {
            let r = if c == 0 { 0 } else { (c % (k - 1)) + 1 };
            shift[(b + r, b + c)] = 1.into();
        }
    }
    flat_family(
        FlatBase::Torus,
        &fiber,
        1,
        &[shift.clone(), shift.mul(&shift)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use morsefam::family::{assemble, family_pages};

    #[test]
    fn wide_family_is_a_complex() {
        for k in [2, 4, 8] {
            let c = assemble(&wide_torus_family(k)).unwrap();
            family_pages(&c).check_consistency().unwrap();
        }
    }
}
