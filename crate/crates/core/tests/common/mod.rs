//! Reference computations for the integration tests. Nothing here calls into the library's
//! algebra: homology is computed with a small machine-integer Smith form, and random
//! families are built from an explicit total differential that the tests keep.
#![allow(dead_code)]

use std::collections::BTreeMap;

use morsefam::algebra::{FgAbGroup, IntMatrix};
use morsefam::family::{Block, FamilyDescriptor};
use morsefam::library::{fiber_from_complex, flat_family, FlatBase};
use morsefam::morse::MorseData;
use rand::seq::SliceRandom;
use rand::Rng;

/// A finitely generated abelian group as `(free rank, torsion coefficients > 1)`.
pub type Group = (usize, Vec<i128>);

pub fn group_of(g: &FgAbGroup) -> Group {
    (
        g.free_rank,
        g.torsion_i64().into_iter().map(i128::from).collect(),
    )
}

pub fn to_i128(m: &IntMatrix) -> Vec<Vec<i128>> {
    m.to_i64_rows()
        .expect("entries fit in i64")
        .into_iter()
        .map(|r| r.into_iter().map(i128::from).collect())
        .collect()
}

fn min_nonzero(a: &[Vec<i128>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, &v) in row.iter().enumerate().skip(t) {
            if v != 0 && best.is_none_or(|(bi, bj)| v.abs() < a[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Nonzero invariant factors (absolute values, each dividing the next).
pub fn invariant_factors(mut a: Vec<Vec<i128>>, cols: usize) -> Vec<i128> {
    let rows = a.len();
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let Some((pi, pj)) = min_nonzero(&a, t) else {
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        let p = a[t][t];
        let mut clean = true;
        for i in t + 1..rows {
            let q = a[i][t] / p;
            if q != 0 {
                for j in t..cols {
                    a[i][j] -= q * a[t][j];
                }
            }
            clean &= a[i][t] == 0;
        }
        for j in t + 1..cols {
            let q = a[t][j] / p;
            if q != 0 {
                for row in a.iter_mut().skip(t) {
                    row[j] -= q * row[t];
                }
            }
            clean &= a[t][j] == 0;
        }
        if !clean {
            continue;
        }
        let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
        if let Some(i) = bad {
            for j in t..cols {
                let v = a[i][j];
                a[t][j] += v;
            }
            continue;
        }
        out.push(p.abs());
        t += 1;
    }
    out
}

pub fn rank(a: &[Vec<i128>], cols: usize) -> usize {
    invariant_factors(a.to_vec(), cols).len()
}

/// Homology of `… → C_{n+1} → C_n → …`, where `diffs[n]` is `∂_n` with `dims[n − 1]`
/// rows and `dims[n]` columns (`diffs[0]` has no rows).
pub fn homology(dims: &[usize], diffs: &[Vec<Vec<i128>>]) -> Vec<Group> {
    (0..dims.len())
        .map(|n| {
            let rk_out = if n == 0 { 0 } else { rank(&diffs[n], dims[n]) };
            let (rk_in, tors) = match diffs.get(n + 1) {
                Some(d) => {
                    let f = invariant_factors(d.clone(), dims[n + 1]);
                    let t = f.iter().copied().filter(|&x| x > 1).collect();
                    (f.len(), t)
                }
                None => (0, vec![]),
            };
            (dims[n] - rk_out - rk_in, tors)
        })
        .collect()
}

pub fn matmul(a: &[Vec<i128>], b: &[Vec<i128>], inner: usize, cols: usize) -> Vec<Vec<i128>> {
    a.iter()
        .map(|r| {
            (0..cols)
                .map(|j| (0..inner).map(|k| r[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// `coker Φ` and `ker Φ` of `Φ − 1` on `ℤⁿ`, the homology of the mapping torus in fiber
/// degree `j` and `j − 1`.
pub fn monodromy_coker_ker(phi: &[Vec<i64>]) -> (Group, Group) {
    let n = phi.len();
    let m: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i128::from(phi[i][j]) - i128::from(i == j))
                .collect()
        })
        .collect();
    let f = invariant_factors(m, n);
    let coker = (n - f.len(), f.iter().copied().filter(|&x| x > 1).collect());
    let ker = (n - f.len(), vec![]);
    (coker, ker)
}

/// Product of `n` random elementary matrices, so `det = ±1`.
pub fn random_unimodular<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    if n == 0 {
        return m;
    }
    for _ in 0..3 * n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            if rng.gen_bool(0.3) {
                for v in m[i].iter_mut() {
                    *v = -*v;
                }
            }
            continue;
        }
        let c = *[-1i64, 1, 2, -2].choose(rng).expect("nonempty");
        for k in 0..n {
            let v = m[j][k];
            m[i][k] += c * v;
        }
    }
    m
}

/// One generator of a random family: base point, fiber label and the two gradings.
#[derive(Clone, Debug)]
pub struct Gen {
    pub x: usize,
    pub p: String,
    pub i: usize,
    pub j: usize,
}

impl Gen {
    pub fn degree(&self) -> usize {
        self.i + self.j
    }
}

/// A random family together with the total differential it was built from.
/// `d[b][a]` is the coefficient of `b` in `∂a`, indexed by position in `gens`.
pub struct RandomFamily {
    pub descriptor: FamilyDescriptor,
    pub gens: Vec<Gen>,
    pub d: Vec<Vec<i128>>,
}

impl RandomFamily {
    /// Total homology by degree from the stored differential.
    pub fn homology(&self) -> Vec<Group> {
        let top = self.gens.iter().map(Gen::degree).max().unwrap_or(0);
        let by_deg: Vec<Vec<usize>> = (0..=top)
            .map(|n| {
                (0..self.gens.len())
                    .filter(|&a| self.gens[a].degree() == n)
                    .collect()
            })
            .collect();
        let dims: Vec<usize> = by_deg.iter().map(Vec::len).collect();
        let diffs: Vec<Vec<Vec<i128>>> = (0..=top)
            .map(|n| {
                if n == 0 {
                    return vec![];
                }
                by_deg[n - 1]
                    .iter()
                    .map(|&b| by_deg[n].iter().map(|&a| self.d[b][a]).collect())
                    .collect()
            })
            .collect();
        homology(&dims, &diffs)
    }
}

const BASES: [FlatBase; 5] = [
    FlatBase::Point,
    FlatBase::Circle,
    FlatBase::Sphere,
    FlatBase::Torus,
    FlatBase::ProjectivePlane,
];

/// Entry `a → b` keeps the family shape: the same fiber, or a strictly lower base level.
/// Every pair of base points whose indices differ by one is joined by a flow line in the
/// bases used here, so `δ₁` entries never lack one.
fn allowed(gens: &[Gen], a: usize, b: usize) -> bool {
    let (ga, gb) = (&gens[a], &gens[b]);
    gb.degree() + 1 == ga.degree() && (gb.i < ga.i || gb.x == ga.x)
}

/// Random family with at most `max_gens` generators: a paired complex, conjugated by
/// filtration-preserving elementary moves, read back as fibers and blocks.
pub fn random_family<R: Rng>(rng: &mut R, max_gens: usize) -> RandomFamily {
    let base = *BASES.choose(rng).expect("nonempty");
    let (bm, dim_base) = base.morse();
    let fiber_dim = rng.gen_range(0..=2usize);
    let nb = bm.critical_points.len();
    let per_x = (max_gens / nb).max(1);
    let mut gens = Vec::new();
    for x in 0..nb {
        let mut k = 0;
        for j in 0..=fiber_dim {
            for _ in 0..rng.gen_range(0..=2) {
                if k < per_x {
                    gens.push(Gen {
                        x,
                        p: format!("p{k}"),
                        i: bm.critical_points[x].index,
                        j,
                    });
                    k += 1;
                }
            }
        }
    }
    let n = gens.len();
    let mut d = vec![vec![0i128; n]; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut used = vec![false; n];
    for &a in &order {
        if used[a] || !rng.gen_bool(0.7) {
            continue;
        }
        let targets: Vec<usize> = (0..n)
            .filter(|&b| !used[b] && b != a && allowed(&gens, a, b))
            .collect();
        if let Some(&b) = targets.choose(rng) {
            d[b][a] = *[1i128, -1, 2, -2, 3].choose(rng).expect("nonempty");
            used[a] = true;
            used[b] = true;
        }
    }
    for _ in 0..rng.gen_range(0..=3 * n) {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let (gu, gv) = (&gens[u], &gens[v]);
        if u == v || gu.degree() != gv.degree() || !(gu.i < gv.i || gu.x == gv.x) {
            continue;
        }
        let c = *[1i128, -1, 2].choose(rng).expect("nonempty");
        // e_v ↦ e_v + c e_u, then the inverse on the left
        for row in d.iter_mut() {
            row[v] += c * row[u];
        }
        for k in 0..n {
            let t = d[v][k];
            d[u][k] -= c * t;
        }
    }
    let descriptor = read_back(&bm, dim_base, fiber_dim, &gens, &d);
    RandomFamily {
        descriptor,
        gens,
        d,
    }
}

fn read_back(
    bm: &MorseData,
    dim_base: usize,
    fiber_dim: usize,
    gens: &[Gen],
    d: &[Vec<i128>],
) -> FamilyDescriptor {
    let nb = bm.critical_points.len();
    let of_x: Vec<Vec<usize>> = (0..nb)
        .map(|x| (0..gens.len()).filter(|&a| gens[a].x == x).collect())
        .collect();
    let mut fibers = BTreeMap::new();
    for x in 0..nb {
        let sign: i128 = if bm.critical_points[x].index.is_multiple_of(2) {
            1
        } else {
            -1
        };
        let pts: Vec<(&str, usize)> = of_x[x]
            .iter()
            .map(|&a| (gens[a].p.as_str(), gens[a].j))
            .collect();
        let mut flows = Vec::new();
        for &a in &of_x[x] {
            for &b in &of_x[x] {
                if d[b][a] != 0 {
                    flows.push((
                        gens[a].p.as_str(),
                        gens[b].p.as_str(),
                        i64::try_from(sign * d[b][a]).expect("small"),
                    ));
                }
            }
        }
        fibers.insert(
            bm.critical_points[x].label.clone(),
            MorseData::new(&pts, &flows),
        );
    }
    let mut blocks = Vec::new();
    for x in 0..nb {
        for y in 0..nb {
            let (ix, iy) = (bm.critical_points[x].index, bm.critical_points[y].index);
            if ix <= iy {
                continue;
            }
            let rows: Vec<Vec<i64>> = of_x[y]
                .iter()
                .map(|&b| {
                    of_x[x]
                        .iter()
                        .map(|&a| i64::try_from(d[b][a]).expect("small"))
                        .collect()
                })
                .collect();
            if rows.iter().flatten().all(|&v| v == 0) {
                continue;
            }
            blocks.push(Block {
                k: ix - iy,
                from_x: bm.critical_points[x].label.clone(),
                to_y: bm.critical_points[y].label.clone(),
                matrix: IntMatrix::from_rows_with_cols(&rows, of_x[x].len()),
            });
        }
    }
    FamilyDescriptor {
        base: bm.clone(),
        dim_base,
        fiber_dim,
        fibers,
        blocks,
        oriented_fibers: true,
    }
}

/// Random flat family over a random base: a fiber complex with a finite-order monodromy of
/// order at most two (signs and an involution on free generators, conjugated into a random
/// basis). Also returns the fiber Betti numbers.
pub fn random_flat_family<R: Rng>(rng: &mut R) -> (FamilyDescriptor, FlatBase) {
    let base = *BASES.choose(rng).expect("nonempty");
    let fiber_dim = rng.gen_range(0..=2usize);
    let dims: Vec<usize> = (0..=fiber_dim).map(|_| rng.gen_range(1..=2)).collect();
    let n: usize = dims.iter().sum();
    let deg: Vec<usize> = (0..=fiber_dim)
        .flat_map(|j| std::iter::repeat_n(j, dims[j]))
        .collect();
    // standard differential and monodromy
    let mut d = vec![vec![0i64; n]; n];
    let mut s = vec![vec![0i64; n]; n];
    let mut used = vec![false; n];
    for a in 0..n {
        let b = (0..n).find(|&b| !used[b] && deg[b] + 1 == deg[a]);
        if !used[a] && rng.gen_bool(0.6) {
            if let Some(b) = b {
                d[b][a] = *[1i64, -1, 2, 3].choose(rng).expect("nonempty");
                used[a] = true;
                used[b] = true;
                let e = if rng.gen_bool(0.5) { 1 } else { -1 };
                s[a][a] = e;
                s[b][b] = e;
            }
        }
    }
    let mut free: Vec<usize> = (0..n).filter(|&a| !used[a]).collect();
    free.shuffle(rng);
    while let Some(a) = free.pop() {
        let e = if rng.gen_bool(0.5) { 1 } else { -1 };
        match free.iter().position(|&b| deg[b] == deg[a]) {
            Some(k) if rng.gen_bool(0.5) => {
                let b = free.remove(k);
                s[b][a] = e;
                s[a][b] = e;
            }
            _ => s[a][a] = e,
        }
    }
    // conjugate by a degree-preserving unimodular P: D' = P⁻¹ D P
    let mut p: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    let mut pinv = p.clone();
    for _ in 0..2 * n {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v || deg[u] != deg[v] {
            continue;
        }
        let c = *[1i64, -1].choose(rng).expect("nonempty");
        // P ← P E with E e_v = e_v + c e_u; P⁻¹ ← E⁻¹ P⁻¹
        for row in p.iter_mut() {
            row[v] += c * row[u];
        }
        for k in 0..n {
            let t = pinv[v][k];
            pinv[u][k] -= c * t;
        }
    }
    let conj = |m: &[Vec<i64>]| -> Vec<Vec<i64>> {
        let mul = |a: &[Vec<i64>], b: &[Vec<i64>]| -> Vec<Vec<i64>> {
            a.iter()
                .map(|r| {
                    (0..n)
                        .map(|j| (0..n).map(|k| r[k] * b[k][j]).sum())
                        .collect()
                })
                .collect()
        };
        mul(&mul(&pinv, m), &p)
    };
    let (d2, s2) = (conj(&d), conj(&s));
    let offsets: Vec<usize> = (0..=fiber_dim).map(|j| dims[..j].iter().sum()).collect();
    let diffs: Vec<IntMatrix> = (0..=fiber_dim)
        .map(|j| {
            if j == 0 {
                return IntMatrix::zeros(0, dims[0]);
            }
            let rows: Vec<Vec<i64>> = (0..dims[j - 1])
                .map(|r| {
                    (0..dims[j])
                        .map(|c| d2[offsets[j - 1] + r][offsets[j] + c])
                        .collect()
                })
                .collect();
            IntMatrix::from_rows_with_cols(&rows, dims[j])
        })
        .collect();
    let fiber = fiber_from_complex(&dims, &diffs);
    let a = IntMatrix::from_rows(&s2);
    let mono: Vec<IntMatrix> = match base.generators() {
        0 => vec![],
        1 => vec![a],
        _ => vec![a.clone(), a.mul(&a)],
    };
    (flat_family(base, &fiber, fiber_dim, &mono), base)
}

/// Cellular chain complex of the Klein bottle with one cell in each of dimensions 0 and 2
/// and two 1-cells: `∂₁ = 0`, `∂₂ = (2, 0)ᵀ`.
pub fn klein_cellular() -> Vec<Group> {
    homology(
        &[1, 2, 1],
        &[vec![], vec![vec![0, 0]], vec![vec![2], vec![0]]],
    )
}

pub fn torus_cellular() -> Vec<Group> {
    homology(
        &[1, 2, 1],
        &[vec![], vec![vec![0, 0]], vec![vec![0], vec![0]]],
    )
}

pub fn cellular_rp2() -> Vec<Group> {
    homology(&[1, 1, 1], &[vec![], vec![vec![0]], vec![vec![2]]])
}
