mod common;

use morsefam::algebra::{smith_normal_form, IntMatrix};
use morsefam::family::{assemble, dualize, e2_crosscheck, family_homology, family_pages};
use morsefam::novikov::{CoeffLattice, Mode};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=5, 1usize..=5)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-6i64..=6, c), r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn smith_form_diagonalises_with_unimodular_factors(rows in matrix()) {
        let a = IntMatrix::from_rows(&rows);
        let s = smith_normal_form(&a);
        prop_assert_eq!(s.u.mul(&a).mul(&s.v), s.diagonal());
        prop_assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(a.rows()));
        prop_assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(a.cols()));
        let nonzero: Vec<BigInt> = s.d.iter().filter(|x| **x != BigInt::from(0)).cloned().collect();
        for w in nonzero.windows(2) {
            prop_assert_eq!(&w[1] % &w[0], BigInt::from(0));
        }
        let oracle: Vec<BigInt> = common::invariant_factors(
            rows.iter().map(|r| r.iter().map(|&x| i128::from(x)).collect()).collect(),
            a.cols(),
        )
        .into_iter()
        .map(BigInt::from)
        .collect();
        let mut mags: Vec<BigInt> = nonzero.iter().map(|x| if *x < BigInt::from(0) { -x } else { x.clone() }).collect();
        mags.sort();
        let mut oracle = oracle;
        oracle.sort();
        prop_assert_eq!(mags, oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_families_are_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rf = common::random_family(&mut rng, 12);
        let c = assemble(&rf.descriptor).expect("valid family");
        let h: Vec<common::Group> = family_homology(&c).groups.iter().map(common::group_of).collect();
        let want = rf.homology();
        let n = h.len().max(want.len());
        let padded = |mut v: Vec<common::Group>| { v.resize(n, (0, vec![])); v };
        prop_assert_eq!(padded(h), padded(want));
        let ss = family_pages(&c);
        prop_assert!(ss.check_consistency().is_ok());
        prop_assert!(e2_crosscheck(&rf.descriptor).expect("valid").agrees());
    }

    #[test]
    fn dual_family_has_mirrored_betti_numbers(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rf = common::random_family(&mut rng, 12);
        let d = &rf.descriptor;
        let top = d.dim_base + d.fiber_dim;
        let betti = |groups: &[morsefam::FgAbGroup]| -> Vec<usize> {
            let mut b: Vec<usize> = groups.iter().map(|g| g.free_rank).collect();
            b.resize(top + 1, 0);
            b
        };
        let b = betti(&family_homology(&assemble(d).expect("valid")).groups);
        let dual = dualize(d).expect("dualizable");
        let bd = betti(&family_homology(&assemble(&dual).expect("valid dual")).groups);
        let mirrored: Vec<usize> = b.iter().rev().copied().collect();
        prop_assert_eq!(bd, mirrored);
    }
}

/// A unit `±e^L + (lower terms)` over the lattice with periods `omega`.
fn unit() -> impl Strategy<Value = (Vec<i64>, Vec<i64>, i64, Vec<(Vec<i64>, i64)>)> {
    prop_oneof![Just(vec![1i64]), Just(vec![2i64, 3])].prop_flat_map(|omega| {
        let r = omega.len();
        (
            Just(omega),
            prop::collection::vec(-3i64..=3, r),
            prop_oneof![Just(1i64), Just(-1)],
            prop::collection::vec((prop::collection::vec(-3i64..=3, r), -4i64..=4), 0..4),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_of_a_unit_is_correct_to_the_requested_precision(
        (omega, lead, sign, rest) in unit(),
        p in 1i64..=12,
    ) {
        let lat = CoeffLattice::from_i64(&omega);
        let top = lat.omega_of(&lead);
        let mut u = lat.int_monomial(&lead, sign);
        for (a, c) in &rest {
            if lat.omega_of(a) < top {
                u = lat.add(&u, &lat.int_monomial(a, *c)).expect("same lattice");
            }
        }
        let floor = BigRational::from_integer(BigInt::from(-p));
        let inv = lat.invert(&u, &floor, Mode::Integer).expect("unit");
        let prod = lat.mul(&u, &inv).expect("same lattice");
        prop_assert!(lat.agree_above(&prod, &lat.one(), &floor));
    }
}
