//! Subgroups of ℤⁿ in canonical Hermite form, with kernel, image, preimage and sums.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::{is_zero_vec, IntMatrix};
use super::AlgebraError;

/// Row echelon reduction of `rows`, looking only at the first `upto` columns when choosing
/// pivots (the remaining columns are carried along). Pivots end up positive and the entries
/// above each pivot are reduced into `[0, pivot)`. Zero rows (in the first `upto` columns) are
/// moved to the end. Returns the pivot columns.
pub(crate) fn echelon(rows: &mut [Vec<BigInt>], upto: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..upto {
        if r == rows.len() {
            break;
        }
        loop {
            // smallest nonzero magnitude in this column at or below r
            let mut best: Option<usize> = None;
            for i in r..rows.len() {
                if rows[i][col].is_zero() {
                    continue;
                }
                match best {
                    Some(b) if rows[b][col].abs() <= rows[i][col].abs() => {}
                    _ => best = Some(i),
                }
            }
            let Some(b) = best else { break };
            rows.swap(r, b);
            let mut done = true;
            for i in r + 1..rows.len() {
                if rows[i][col].is_zero() {
                    continue;
                }
                let q = rows[i][col].div_floor(&rows[r][col]);
                let (lo, hi) = rows.split_at_mut(i);
                let piv = &lo[r];
                for (x, y) in hi[0].iter_mut().zip(piv.iter()) {
                    if !y.is_zero() {
                        *x -= &q * y;
                    }
                }
                if !hi[0][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if r < rows.len() && !rows[r][col].is_zero() {
            if rows[r][col].is_negative() {
                for x in rows[r].iter_mut() {
                    *x = -&*x;
                }
            }
            let (lo, hi) = rows.split_at_mut(r);
            let piv = &hi[0];
            for row in lo.iter_mut() {
                let q = row[col].div_floor(&piv[col]);
                if !q.is_zero() {
                    for (x, y) in row.iter_mut().zip(piv.iter()) {
                        if !y.is_zero() {
                            *x -= &q * y;
                        }
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
    }
    pivots
}

/// A subgroup of ℤⁿ. The generators are kept in Hermite normal form, which makes equality of
/// subgroups a plain comparison of the stored data.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subgroup {
    ambient_rank: usize,
    // generator rows in row-HNF; the public basis matrix is the transpose
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

impl Subgroup {
    pub fn from_generators(
        ambient_rank: usize,
        gens: impl IntoIterator<Item = Vec<BigInt>>,
    ) -> Self {
        let mut rows: Vec<Vec<BigInt>> = gens
            .into_iter()
            .inspect(|g| assert_eq!(g.len(), ambient_rank, "generator length mismatch"))
            .filter(|g| !is_zero_vec(g))
            .collect();
        let pivots = echelon(&mut rows, ambient_rank);
        rows.truncate(pivots.len());
        Subgroup {
            ambient_rank,
            rows,
            pivots,
        }
    }

    pub fn trivial(ambient_rank: usize) -> Self {
        Subgroup {
            ambient_rank,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient_rank: usize) -> Self {
        let id = IntMatrix::identity(ambient_rank);
        Subgroup {
            ambient_rank,
            rows: id.row_vecs(),
            pivots: (0..ambient_rank).collect(),
        }
    }

    /// Coordinate sublattice spanned by the listed standard basis vectors.
    pub fn coordinate(ambient_rank: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let gens = coords.into_iter().map(|c| {
            let mut v = vec![BigInt::zero(); ambient_rank];
            v[c] = BigInt::one();
            v
        });
        Self::from_generators(ambient_rank, gens)
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.rows.is_empty()
    }

    /// Basis vectors in canonical order.
    pub fn generators(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// Basis as the columns of an `ambient_rank × rank` matrix (column Hermite form).
    pub fn basis(&self) -> IntMatrix {
        IntMatrix::from_columns(self.ambient_rank, &self.rows)
    }

    /// Coordinates of `x` in the canonical basis, or `None` when `x` is not in the subgroup.
    pub fn coordinates(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(x.len(), self.ambient_rank, "vector length mismatch");
        let mut rest = x.to_vec();
        let mut coords = Vec::with_capacity(self.rows.len());
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let (q, r) = rest[p].div_rem(&row[p]);
            if !r.is_zero() {
                return None;
            }
            if !q.is_zero() {
                for (a, b) in rest.iter_mut().zip(row) {
                    if !b.is_zero() {
                        *a -= &q * b;
                    }
                }
            }
            coords.push(q);
        }
        if is_zero_vec(&rest) {
            Some(coords)
        } else {
            None
        }
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        self.coordinates(x).is_some()
    }

    pub fn contains_subgroup(&self, other: &Subgroup) -> bool {
        assert_eq!(self.ambient_rank, other.ambient_rank, "ambient mismatch");
        other.rows.iter().all(|g| self.contains(g))
    }

    pub fn combination(&self, coords: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(coords.len(), self.rows.len());
        let mut out = vec![BigInt::zero(); self.ambient_rank];
        for (c, row) in coords.iter().zip(&self.rows) {
            if c.is_zero() {
                continue;
            }
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b;
            }
        }
        out
    }

    pub fn sum(&self, other: &Subgroup) -> Result<Subgroup, AlgebraError> {
        if self.ambient_rank != other.ambient_rank {
            return Err(AlgebraError::AmbientMismatch(
                self.ambient_rank,
                other.ambient_rank,
            ));
        }
        Ok(Subgroup::from_generators(
            self.ambient_rank,
            self.rows.iter().chain(&other.rows).cloned(),
        ))
    }

    pub fn intersection(&self, other: &Subgroup) -> Result<Subgroup, AlgebraError> {
        if self.ambient_rank != other.ambient_rank {
            return Err(AlgebraError::AmbientMismatch(
                self.ambient_rank,
                other.ambient_rank,
            ));
        }
        // {x : x in self} with x mapped by the identity into `other`
        let emb = self.basis();
        let pre = preimage(&emb, other)?;
        Ok(Subgroup::from_generators(
            self.ambient_rank,
            pre.rows.iter().map(|c| self.combination(c)),
        ))
    }

    /// Image under a linear map given as a matrix acting on column vectors.
    pub fn map(&self, a: &IntMatrix) -> Subgroup {
        assert_eq!(a.cols(), self.ambient_rank, "shape mismatch");
        Subgroup::from_generators(a.rows(), self.rows.iter().map(|g| a.mul_vec(g)))
    }

    /// Index `[ℤⁿ : self]` when finite.
    pub fn index(&self) -> Option<BigInt> {
        if self.rank() < self.ambient_rank {
            return None;
        }
        Some(
            self.rows
                .iter()
                .zip(&self.pivots)
                .map(|(r, &p)| r[p].clone())
                .product(),
        )
    }
}

/// Saturated kernel `{x : a x = 0}`.
pub fn kernel(a: &IntMatrix) -> Subgroup {
    let (m, n) = a.shape();
    // rows of [aᵀ | I]; echelon on the aᵀ part, surviving identity parts span the kernel
    let mut rows: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut r = a.column(j);
            r.extend((0..n).map(|k| {
                if k == j {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }));
            r
        })
        .collect();
    let piv = echelon(&mut rows, m);
    let gens = rows[piv.len()..].iter().map(|r| r[m..].to_vec());
    Subgroup::from_generators(n, gens)
}

/// Column span.
pub fn image(a: &IntMatrix) -> Subgroup {
    Subgroup::from_generators(a.rows(), a.columns())
}

/// `{x : a x ∈ s}`.
pub fn preimage(a: &IntMatrix, s: &Subgroup) -> Result<Subgroup, AlgebraError> {
    if a.rows() != s.ambient_rank() {
        return Err(AlgebraError::Shape(format!(
            "preimage: map has {} rows but subgroup lives in rank {}",
            a.rows(),
            s.ambient_rank()
        )));
    }
    let n = a.cols();
    if s.is_trivial() {
        return Ok(kernel(a));
    }
    // kernel of [a | -basis(s)], projected to the first n coordinates
    let aug = a.hstack(&s.basis().neg());
    let k = kernel(&aug);
    Ok(Subgroup::from_generators(
        n,
        k.generators().iter().map(|g| g[..n].to_vec()),
    ))
}

/// Solves `a x = b` over the integers, if a solution exists.
pub fn solve(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m);
    // rows of [aᵀ | I]: reduce, then express b through the pivot rows
    let mut rows: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut r = a.column(j);
            r.extend((0..n).map(|k| {
                if k == j {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }));
            r
        })
        .collect();
    let piv = echelon(&mut rows, m);
    let mut rest = b.to_vec();
    let mut x = vec![BigInt::zero(); n];
    for (r, &p) in rows.iter().zip(&piv) {
        let (q, rem) = rest[p].div_rem(&r[p]);
        if !rem.is_zero() {
            return None;
        }
        if q.is_zero() {
            continue;
        }
        for k in 0..m {
            rest[k] -= &q * &r[k];
        }
        for k in 0..n {
            x[k] += &q * &r[m + k];
        }
    }
    if is_zero_vec(&rest) {
        Some(x)
    } else {
        None
    }
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(a: &IntMatrix) -> Option<IntMatrix> {
    if a.rows() != a.cols() || !a.determinant().abs().is_one() {
        return None;
    }
    let n = a.rows();
    let cols: Option<Vec<Vec<BigInt>>> = (0..n)
        .map(|j| {
            let mut e = vec![BigInt::zero(); n];
            e[j] = BigInt::one();
            solve(a, &e)
        })
        .collect();
    Some(IntMatrix::from_columns(n, &cols?))
}
