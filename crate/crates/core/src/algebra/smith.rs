//! Smith normal form over the integers with unimodular transforms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;

/// `u * a * v == diag(d)`, with `d[k] | d[k+1]` among the nonzero factors and zeros trailing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub d: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.d.iter().filter(|x| !x.is_zero()).count()
    }

    /// The diagonal matrix `u * a * v` with the shape of the input.
    pub fn diagonal(&self) -> IntMatrix {
        IntMatrix::diagonal(self.u.rows(), self.v.rows(), &self.d)
    }
}

struct Work {
    a: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
    u_inv: Vec<Vec<BigInt>>,
    v: Vec<Vec<BigInt>>,
    v_inv: Vec<Vec<BigInt>>,
}

fn ident(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect()
}

impl Work {
    // row_i += q * row_t on A and U; inverse gets col_t -= q * col_i.
    fn row_axpy(&mut self, i: usize, t: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        let (ri, rt) = pick2(&mut self.a, i, t);
        for (x, y) in ri.iter_mut().zip(rt.iter()) {
            *x += q * y;
        }
        let (ri, rt) = pick2(&mut self.u, i, t);
        for (x, y) in ri.iter_mut().zip(rt.iter()) {
            *x += q * y;
        }
        for row in self.u_inv.iter_mut() {
            let d = q * &row[i];
            row[t] -= d;
        }
    }

    // col_j += q * col_t on A and V; inverse gets row_t -= q * row_j.
    fn col_axpy(&mut self, j: usize, t: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for row in self.a.iter_mut() {
            let d = q * &row[t];
            row[j] += d;
        }
        for row in self.v.iter_mut() {
            let d = q * &row[t];
            row[j] += d;
        }
        let (rt, rj) = pick2(&mut self.v_inv, t, j);
        for (x, y) in rt.iter_mut().zip(rj.iter()) {
            *x -= q * y;
        }
    }

    fn swap_rows(&mut self, i: usize, t: usize) {
        if i == t {
            return;
        }
        self.a.swap(i, t);
        self.u.swap(i, t);
        for row in self.u_inv.iter_mut() {
            row.swap(i, t);
        }
    }

    fn swap_cols(&mut self, j: usize, t: usize) {
        if j == t {
            return;
        }
        for row in self.a.iter_mut() {
            row.swap(j, t);
        }
        for row in self.v.iter_mut() {
            row.swap(j, t);
        }
        self.v_inv.swap(j, t);
    }

    fn negate_row(&mut self, t: usize) {
        for x in self.a[t].iter_mut() {
            *x = -&*x;
        }
        for x in self.u[t].iter_mut() {
            *x = -&*x;
        }
        for row in self.u_inv.iter_mut() {
            row[t] = -&row[t];
        }
    }
}

fn pick2<T>(v: &mut [T], i: usize, t: usize) -> (&mut T, &T) {
    assert_ne!(i, t);
    if i < t {
        let (lo, hi) = v.split_at_mut(t);
        (&mut lo[i], &hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &lo[t])
    }
}

/// Smith normal form. Deterministic: pivots are the smallest-magnitude entries, ties broken
/// by row-major position.
pub fn smith_normal_form(a: &IntMatrix) -> SmithForm {
    let (m, n) = a.shape();
    let mut w = Work {
        a: a.row_vecs(),
        u: ident(m),
        u_inv: ident(m),
        v: ident(n),
        v_inv: ident(n),
    };
    let steps = m.min(n);
    let mut d = Vec::with_capacity(steps);
    for t in 0..steps {
        // smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                let x = &w.a[i][j];
                if x.is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if w.a[bi][bj].abs() <= x.abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.swap_rows(t, pi);
        w.swap_cols(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                if w.a[i][t].is_zero() {
                    continue;
                }
                let q = w.a[i][t].div_floor(&w.a[t][t]);
                w.row_axpy(i, t, &-q);
                if !w.a[i][t].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..n {
                if w.a[t][j].is_zero() {
                    continue;
                }
                let q = w.a[t][j].div_floor(&w.a[t][t]);
                w.col_axpy(j, t, &-q);
                if !w.a[t][j].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // move the smallest remainder in row/column t onto the pivot
                let mut best = (t, t);
                for i in t + 1..m {
                    let x = &w.a[i][t];
                    if !x.is_zero() && x.abs() < w.a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..n {
                    let x = &w.a[t][j];
                    if !x.is_zero() && x.abs() < w.a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                w.swap_rows(t, best.0);
                w.swap_cols(t, best.1);
                continue;
            }
            // divisibility of the trailing block by the pivot
            let p = w.a[t][t].clone();
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !w.a[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => w.row_axpy(t, i, &BigInt::one()),
                None => break,
            }
        }
        if w.a[t][t].is_negative() {
            w.negate_row(t);
        }
        d.push(w.a[t][t].clone());
    }
    while d.len() < steps {
        d.push(BigInt::zero());
    }
    let to_mat = |rows: Vec<Vec<BigInt>>, c: usize| IntMatrix::from_big_rows(rows, c);
    SmithForm {
        d,
        u: to_mat(w.u, m),
        u_inv: to_mat(w.u_inv, m),
        v: to_mat(w.v, n),
        v_inv: to_mat(w.v_inv, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &IntMatrix) -> SmithForm {
        let s = smith_normal_form(a);
        assert_eq!(s.u.mul(a).mul(&s.v), s.diagonal());
        assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(a.rows()));
        assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(a.cols()));
        assert!(s.u.determinant().abs().is_one());
        assert!(s.v.determinant().abs().is_one());
        let nz: Vec<_> = s.d.iter().filter(|x| !x.is_zero()).collect();
        for w in nz.windows(2) {
            assert!(w[1].is_multiple_of(w[0]));
        }
        let first_zero = s.d.iter().position(Zero::is_zero).unwrap_or(s.d.len());
        assert!(s.d[first_zero..].iter().all(Zero::is_zero));
        s
    }

    #[test]
    fn zero_one_by_one() {
        let s = check(&IntMatrix::from_rows(&[[0]]));
        assert_eq!(s.d, vec![BigInt::zero()]);
        assert_eq!(s.u, IntMatrix::identity(1));
        assert_eq!(s.v, IntMatrix::identity(1));
    }

    #[test]
    fn identity_three() {
        let s = check(&IntMatrix::identity(3));
        assert_eq!(s.d, vec![BigInt::one(); 3]);
    }

    #[test]
    fn two_by_two_example() {
        // gcd of entries is 2 and |det| = 8, so the factors are 2 and 4
        let s = check(&IntMatrix::from_rows(&[[2, 4], [6, 8]]));
        assert_eq!(s.d, vec![BigInt::from(2), BigInt::from(4)]);
    }

    #[test]
    fn rectangular_and_divisibility_fixup() {
        let s = check(&IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        assert_eq!(s.d, vec![BigInt::from(1), BigInt::from(6)]);
        let s = check(&IntMatrix::from_rows(&[[1, -1, 0], [0, 1, -1]]));
        assert_eq!(s.d, vec![BigInt::one(), BigInt::one()]);
        check(&IntMatrix::from_rows(&[[0, 0], [0, 0], [4, 6]]));
    }

    #[test]
    fn deterministic() {
        let a = IntMatrix::from_rows(&[[3, 5, 7], [2, -4, 6], [9, 1, 0]]);
        assert_eq!(smith_normal_form(&a), smith_normal_form(&a));
    }
}
