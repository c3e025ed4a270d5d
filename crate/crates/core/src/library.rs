//! Built-in examples. Every descriptor here is written out by hand; the numerical pipeline
//! in [`crate::flowcount`] regenerates the geometric ones independently.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::algebra::IntMatrix;
use crate::family::{fiber_order, product, Block, FamilyDescriptor};
use crate::morse::{circle_base, MorseData};

/// Fiber circle: maximum `p0` at `θ = 0`, minimum `p1` at `θ = π`.
pub fn circle_fiber() -> MorseData {
    MorseData::new(
        &[("p0", 1), ("p1", 0)],
        &[("p0", "p1", 1), ("p0", "p1", -1)],
    )
}

/// Round 2-sphere: minimum `q0`, maximum `q1`.
pub fn sphere_fiber() -> MorseData {
    MorseData::new(&[("q0", 0), ("q1", 2)], &[])
}

/// Base 2-sphere with a maximum `n` and a minimum `s`.
pub fn sphere_base() -> MorseData {
    MorseData::new(&[("n", 2), ("s", 0)], &[])
}

/// Base torus with minimum `m`, saddles `s1`, `s2` and maximum `M`.
pub fn torus_base() -> MorseData {
    MorseData::new(
        &[("m", 0), ("s1", 1), ("s2", 1), ("M", 2)],
        &[
            ("s1", "m", 1),
            ("s1", "m", -1),
            ("s2", "m", 1),
            ("s2", "m", -1),
            ("M", "s1", 1),
            ("M", "s1", -1),
            ("M", "s2", 1),
            ("M", "s2", -1),
        ],
    )
}

/// Base real projective plane: minimum `m`, one saddle `a`, maximum `M` with `∂M = 2a`.
pub fn projective_base() -> MorseData {
    MorseData::new(
        &[("m", 0), ("a", 1), ("M", 2)],
        &[("a", "m", 1), ("a", "m", -1), ("M", "a", 1), ("M", "a", 1)],
    )
}

/// Trivial circle bundle over the circle.
pub fn torus() -> FamilyDescriptor {
    product(&circle_base(), 1, &circle_fiber(), 1)
}

/// Klein bottle as the circle bundle over the circle with monodromy `θ ↦ −θ`. Crossing the
/// gluing fixes both fiber critical points and reverses the unstable direction of the
/// maximum, so the second transport is `diag(+1, −1)` and carries the flow sign `−1`.
pub fn klein() -> FamilyDescriptor {
    let mut d = torus();
    d.blocks[1].matrix = IntMatrix::from_rows(&[[-1, 0], [0, 1]]);
    d.oriented_fibers = false;
    d
}

/// Trivial torus with fiber function `cos(θ − 2πt)`: the fiber maximum at `x0` is `p0`
/// (`θ = π/2`) and at `x1` it is `p1` (`θ = 3π/2`).
pub fn rotating_torus() -> FamilyDescriptor {
    let at_x0 = MorseData::new(
        &[("p0", 1), ("p1", 0)],
        &[("p0", "p1", 1), ("p0", "p1", -1)],
    );
    let at_x1 = MorseData::new(
        &[("p0", 0), ("p1", 1)],
        &[("p1", "p0", 1), ("p1", "p0", -1)],
    );
    let fibers = BTreeMap::from([("x0".to_string(), at_x0), ("x1".to_string(), at_x1)]);
    let blocks = vec![
        Block {
            k: 1,
            from_x: "x0".into(),
            to_y: "x1".into(),
            matrix: IntMatrix::identity(2),
        },
        Block {
            k: 1,
            from_x: "x0".into(),
            to_y: "x1".into(),
            matrix: IntMatrix::identity(2).neg(),
        },
    ];
    FamilyDescriptor {
        base: circle_base(),
        dim_base: 1,
        fiber_dim: 1,
        fibers,
        blocks,
        oriented_fibers: true,
    }
}

/// `S¹ × S²`, given combinatorially.
pub fn s2_combinatorial() -> FamilyDescriptor {
    product(&circle_base(), 1, &sphere_fiber(), 2)
}

/// Circle fibers over the 2-sphere with `δ₂[n → s]` sending the fiber minimum class to
/// `c` times the fiber maximum class (`c = 1` is the Hopf fibration pattern).
pub fn sphere_base_toy(c: i64) -> FamilyDescriptor {
    let fibers = BTreeMap::from([
        ("n".to_string(), circle_fiber()),
        ("s".to_string(), circle_fiber()),
    ]);
    // fiber order is [p1 (index 0), p0 (index 1)]
    let blocks = vec![Block {
        k: 2,
        from_x: "n".into(),
        to_y: "s".into(),
        matrix: IntMatrix::from_rows(&[[0, 0], [c, 0]]),
    }];
    FamilyDescriptor {
        base: sphere_base(),
        dim_base: 2,
        fiber_dim: 1,
        fibers,
        blocks,
        oriented_fibers: true,
    }
}

/// Fiber with free homology `ℤⁿ` in degree `j` (no flows).
pub fn free_fiber(n: usize, j: usize) -> MorseData {
    let labels: Vec<String> = (0..n).map(|k| format!("g{k}")).collect();
    let pts: Vec<(&str, usize)> = labels.iter().map(|l| (l.as_str(), j)).collect();
    MorseData::new(&pts, &[])
}

/// Family over the circle whose fiber is `ℤⁿ` in degree `j` and whose monodromy is `Φ`.
pub fn circle_monodromy_family(phi: &IntMatrix, j: usize) -> FamilyDescriptor {
    let fiber = free_fiber(phi.rows(), j);
    let mut d = product(&circle_base(), 1, &fiber, j);
    d.blocks[1].matrix = phi.neg();
    d
}

/// Fiber Morse data realising a given chain complex: `dims[j]` points of index `j` labelled
/// `c{j}_{k}`, with flow counts read off from `diffs[j] : C_j → C_{j−1}`.
pub fn fiber_from_complex(dims: &[usize], diffs: &[IntMatrix]) -> MorseData {
    let labels: Vec<Vec<String>> = dims
        .iter()
        .enumerate()
        .map(|(j, &n)| (0..n).map(|k| format!("c{j}_{k}")).collect())
        .collect();
    let mut m = MorseData::new(&[], &[]);
    for (j, ls) in labels.iter().enumerate() {
        for l in ls {
            m.critical_points.push(crate::morse::CriticalPoint {
                label: l.clone(),
                index: j,
            });
        }
    }
    for (j, d) in diffs.iter().enumerate().skip(1) {
        for r in 0..d.rows() {
            for c in 0..d.cols() {
                let v = i64::try_from(&d[(r, c)]).expect("flow counts fit in i64");
                if v != 0 {
                    m.flows.push(crate::morse::Flow {
                        from: labels[j][c].clone(),
                        to: labels[j - 1][r].clone(),
                        count: v,
                    });
                }
            }
        }
    }
    m
}

/// Bases on which [`flat_family`] knows a presentation of the fundamental group by flow
/// lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlatBase {
    Point,
    Circle,
    Sphere,
    Torus,
    ProjectivePlane,
}

impl FlatBase {
    pub fn morse(self) -> (MorseData, usize) {
        match self {
            FlatBase::Point => (MorseData::point(), 0),
            FlatBase::Circle => (circle_base(), 1),
            FlatBase::Sphere => (sphere_base(), 2),
            FlatBase::Torus => (torus_base(), 2),
            FlatBase::ProjectivePlane => (projective_base(), 2),
        }
    }

    /// Monodromy word for each base flow record: indices into the generator list, applied
    /// right to left.
    fn words(self) -> Vec<Vec<usize>> {
        match self {
            FlatBase::Point | FlatBase::Sphere => vec![],
            FlatBase::Circle => vec![vec![], vec![0]],
            // s1 = loop a, s2 = loop b, ∂M = (1 − B)a + (A − 1)b
            FlatBase::Torus => vec![
                vec![0],
                vec![],
                vec![1],
                vec![],
                vec![],
                vec![1],
                vec![0],
                vec![],
            ],
            // ∂M = (1 + T)a, ∂a = (T − 1)m
            FlatBase::ProjectivePlane => vec![vec![0], vec![], vec![], vec![0]],
        }
    }

    pub fn generators(self) -> usize {
        match self {
            FlatBase::Point | FlatBase::Sphere => 0,
            FlatBase::Circle | FlatBase::ProjectivePlane => 1,
            FlatBase::Torus => 2,
        }
    }
}

/// Flat family: the same fiber complex over every base critical point, `δ₁` blocks equal to
/// flow sign times monodromy, and no higher pieces. `monodromy` holds chain automorphisms of
/// the fiber in fiber order (commuting, for the torus).
pub fn flat_family(
    base: FlatBase,
    fiber: &MorseData,
    fiber_dim: usize,
    monodromy: &[IntMatrix],
) -> FamilyDescriptor {
    let (bm, dim_base) = base.morse();
    let n = fiber_order(fiber).len();
    let mut d = product(&bm, dim_base, fiber, fiber_dim);
    for (b, word) in d.blocks.iter_mut().zip(base.words()) {
        let t = word
            .iter()
            .fold(IntMatrix::identity(n), |acc, &g| monodromy[g].mul(&acc));
        b.matrix = b.matrix.mul(&t);
    }
    d
}

/// Flat family over `ℝP²` with no higher pieces whose spectral sequence still has
/// `d₂ ≠ 0` over `ℤ`: the fiber is `ℤ² → ℤ`, both entries `2`, and the monodromy swaps the
/// two degree-1 generators. `d₂ : E²_{2,0} = ℤ/2 → E²_{0,1} = ℤ/2` is an isomorphism, so the
/// failure to collapse is invisible over `ℚ`.
pub fn projective_torsion_family() -> FamilyDescriptor {
    let fiber = fiber_from_complex(
        &[1, 2],
        &[IntMatrix::zeros(0, 1), IntMatrix::from_rows(&[[2, 2]])],
    );
    let swap = IntMatrix::from_rows(&[[1, 0, 0], [0, 0, 1], [0, 1, 0]]);
    flat_family(FlatBase::ProjectivePlane, &fiber, 1, &[swap])
}

/// Every built-in family descriptor by name.
pub fn descriptor(name: &str) -> Option<FamilyDescriptor> {
    Some(match name {
        "klein" => klein(),
        "torus" | "torus-trivial" => torus(),
        "rotating_torus" => rotating_torus(),
        "s2_combinatorial" => s2_combinatorial(),
        "sphere_base_toy" => sphere_base_toy(1),
        "sphere_base_toy2" => sphere_base_toy(2),
        "projective_torsion" => projective_torsion_family(),
        _ => return None,
    })
}

pub const DESCRIPTOR_NAMES: &[&str] = &[
    "klein",
    "torus",
    "rotating_torus",
    "s2_combinatorial",
    "sphere_base_toy",
    "sphere_base_toy2",
    "projective_torsion",
];

pub fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FgAbGroup;
    use crate::family::{assemble, e2_crosscheck, family_homology, family_pages, FamilyError};

    fn g(free: usize, tors: &[i64]) -> FgAbGroup {
        FgAbGroup::from_i64(free, tors)
    }

    #[test]
    fn klein_pages_and_homology() {
        let c = assemble(&klein()).unwrap();
        let ss = family_pages(&c);
        let e2 = ss.page(2).groups();
        assert_eq!(
            e2,
            BTreeMap::from([
                ((0, 0), g(1, &[])),
                ((1, 0), g(1, &[])),
                ((0, 1), g(0, &[2]))
            ])
        );
        assert!(ss.collapses_at(2));
        assert_eq!(
            family_homology(&c).groups,
            vec![g(1, &[]), g(1, &[2]), g(0, &[])]
        );
        assert!(e2_crosscheck(&klein()).unwrap().agrees());
    }

    #[test]
    fn flip_that_is_not_a_chain_map_is_rejected() {
        // fiber differential 2: the flip diag(+1, −1) on both lines no longer commutes with it
        let fiber = MorseData::new(&[("p0", 1), ("p1", 0)], &[("p0", "p1", 1), ("p0", "p1", 1)]);
        let mut d = product(&circle_base(), 1, &fiber, 1);
        d.blocks[0].matrix = IntMatrix::from_rows(&[[1, 0], [0, -1]]);
        d.blocks[1].matrix = IntMatrix::from_rows(&[[1, 0], [0, -1]]);
        match assemble(&d) {
            Err(FamilyError::NotAComplex {
                from,
                to,
                coefficient,
            }) => {
                assert_eq!((from.as_str(), to.as_str()), ("(x0,p0)", "(x1,p1)"));
                assert_eq!(coefficient, BigInt::from(-8));
            }
            other => panic!("expected δ² rejection, got {other:?}"),
        }
        assert!(assemble(&product(&circle_base(), 1, &fiber, 1)).is_ok());
    }

    #[test]
    fn sphere_base_toys() {
        let c = assemble(&sphere_base_toy(1)).unwrap();
        assert_eq!(
            family_homology(&c).groups,
            vec![g(1, &[]), g(0, &[]), g(0, &[]), g(1, &[])]
        );
        let c = assemble(&sphere_base_toy(2)).unwrap();
        assert_eq!(
            family_homology(&c).groups,
            vec![g(1, &[]), g(0, &[2]), g(0, &[]), g(1, &[])]
        );
        let e3 = family_pages(&c).page(3).groups();
        assert_eq!(e3.get(&(0, 1)), Some(&g(0, &[2])));
    }

    #[test]
    fn projective_torsion_needs_d2() {
        let c = assemble(&projective_torsion_family()).unwrap();
        let ss = family_pages(&c);
        assert!(!ss.collapses_at(2));
        assert_eq!(ss.page(2).group(2, 0), g(0, &[2]));
        assert_eq!(ss.page(2).group(0, 1), g(0, &[2]));
        assert!(ss.infinity().group(2, 0).is_trivial());
        assert!(crate::family::collapses_rationally(&c));
    }

    #[test]
    fn flat_torus_base_is_a_complex() {
        let fiber = free_fiber(2, 0);
        let swap = IntMatrix::from_rows(&[[0, 1], [1, 0]]);
        let d = flat_family(FlatBase::Torus, &fiber, 0, &[swap.clone(), swap]);
        assert!(assemble(&d).is_ok());
        let d = flat_family(
            FlatBase::ProjectivePlane,
            &fiber,
            0,
            &[IntMatrix::from_rows(&[[0, 1], [1, 0]])],
        );
        assert!(assemble(&d).is_ok());
    }
}
