//! Novikov complexes of closed 1-forms and their homology over `Λ`.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::ring::{CoeffLattice, Mode, NovikovElement, NovikovError};
use crate::algebra::{FgAbGroup, IntMatrix};
use crate::complexes::{numbered_labels, GradedComplex};
use crate::morse::{CriticalPoint, MorseData};
use crate::spectral::page_dims_from_ranks;

/// Matrix over `Λ`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<NovikovElement>,
}

impl NovMatrix {
    pub fn zeros(lat: &CoeffLattice, rows: usize, cols: usize) -> Self {
        NovMatrix {
            rows,
            cols,
            data: vec![lat.zero(); rows * cols],
        }
    }

    pub fn identity(lat: &CoeffLattice, n: usize) -> Self {
        let mut m = Self::zeros(lat, n, n);
        for i in 0..n {
            m.data[i * n + i] = lat.one();
        }
        m
    }

    pub fn from_int(lat: &CoeffLattice, m: &IntMatrix) -> Self {
        let mut out = Self::zeros(lat, m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.data[i * m.cols() + j] = lat.monomial(
                    &vec![0; lat.rank],
                    BigRational::from_integer(m[(i, j)].clone()),
                );
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> &NovikovElement {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: NovikovElement) {
        self.data[i * self.cols + j] = x;
    }

    pub fn mul(&self, lat: &CoeffLattice, other: &NovMatrix) -> Result<NovMatrix, NovikovError> {
        if self.cols != other.rows {
            return Err(NovikovError::Invalid(format!(
                "shape {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(lat, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = lat.zero();
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if a.is_known_zero() || b.is_known_zero() {
                        continue;
                    }
                    acc = lat.add(&acc, &lat.mul(a, b)?)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, lat: &CoeffLattice, other: &NovMatrix) -> Result<NovMatrix, NovikovError> {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| lat.sub(a, b))
            .collect::<Result<_, _>>()?;
        Ok(NovMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> NovMatrix {
        let data = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.get(i, j).clone()))
            .collect();
        NovMatrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Every entry has no known term.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.terms.is_empty())
    }

    pub fn scale_all(
        &self,
        lat: &CoeffLattice,
        x: &NovikovElement,
    ) -> Result<NovMatrix, NovikovError> {
        let data = self
            .data
            .iter()
            .map(|a| lat.mul(x, a))
            .collect::<Result<_, _>>()?;
        Ok(NovMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Entries as plain integers, when every entry is an exact multiple of `e^0`.
    pub fn to_int(&self) -> Option<IntMatrix> {
        let mut out = IntMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self.get(i, j);
                if !x.is_exact() {
                    return None;
                }
                for (a, c) in &x.terms {
                    if a.iter().any(|&v| v != 0) || !c.is_integer() {
                        return None;
                    }
                    out[(i, j)] = c.to_integer();
                }
            }
        }
        Some(out)
    }
}

/// Rank over the fraction field of `Λ` by division-free elimination. Exact inputs stay exact;
/// an entry with no known term but a finite floor cannot serve as a pivot, and if the rank
/// hinges on such an entry the computation stops with [`NovikovError::PrecisionExhausted`].
pub fn rank(
    lat: &CoeffLattice,
    m: &NovMatrix,
    precision: &BigRational,
) -> Result<usize, NovikovError> {
    let mut rows: Vec<Vec<NovikovElement>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j).clone()).collect())
        .collect();
    let mut r = 0;
    for c in 0..m.cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c].has_terms()) else {
            if (r..rows.len()).any(|i| !rows[i][c].is_exact()) {
                return Err(NovikovError::PrecisionExhausted(
                    format!("column {c} has no certified pivot"),
                    precision.clone(),
                ));
            }
            continue;
        };
        rows.swap(r, p);
        let piv = rows[r][c].clone();
        for i in r + 1..rows.len() {
            let a = rows[i][c].clone();
            if a.is_known_zero() {
                continue;
            }
            for j in c..m.cols {
                let lhs = lat.mul(&piv, &rows[i][j])?;
                let rhs = lat.mul(&a, &rows[r][j])?;
                rows[i][j] = lat.sub(&lhs, &rhs)?;
            }
        }
        r += 1;
    }
    Ok(r)
}

/// Critical points of a closed 1-form with flow records `(p, q, μ, count)`: `∂p` gains
/// `count · e^μ q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NovikovComplexData {
    pub lattice: CoeffLattice,
    pub critical_points: Vec<CriticalPoint>,
    pub flows: Vec<NovikovFlow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NovikovFlow {
    pub from: String,
    pub to: String,
    pub class: Vec<i64>,
    pub count: i64,
}

impl NovikovComplexData {
    /// Exact Morse data with every flow in class `0`.
    pub fn from_morse(lat: &CoeffLattice, m: &MorseData) -> Self {
        NovikovComplexData {
            lattice: lat.clone(),
            critical_points: m.critical_points.clone(),
            flows: m
                .flows
                .iter()
                .map(|f| NovikovFlow {
                    from: f.from.clone(),
                    to: f.to.clone(),
                    class: vec![0; lat.rank],
                    count: f.count,
                })
                .collect(),
        }
    }

    fn shape(&self) -> MorseData {
        MorseData {
            critical_points: self.critical_points.clone(),
            flows: vec![],
            orientation: "novikov".into(),
        }
    }

    pub fn by_index(&self) -> Vec<Vec<String>> {
        self.shape().by_index()
    }

    pub fn boundary(&self) -> Result<Vec<NovMatrix>, NovikovError> {
        let lat = &self.lattice;
        let shape = self.shape();
        shape
            .validate()
            .map_err(|e| NovikovError::Invalid(e.to_string()))?;
        let groups = shape.by_index();
        let pos = shape.positions();
        let mut d: Vec<NovMatrix> = (0..groups.len())
            .map(|i| {
                NovMatrix::zeros(
                    lat,
                    if i == 0 { 0 } else { groups[i - 1].len() },
                    groups[i].len(),
                )
            })
            .collect();
        for f in &self.flows {
            if f.class.len() != lat.rank {
                return Err(NovikovError::LatticeMismatch {
                    expected: lat.rank,
                    found: f.class.len(),
                });
            }
            let &(i, c) = pos
                .get(&f.from)
                .ok_or_else(|| NovikovError::Invalid(format!("unknown point {}", f.from)))?;
            let &(i2, r) = pos
                .get(&f.to)
                .ok_or_else(|| NovikovError::Invalid(format!("unknown point {}", f.to)))?;
            if i != i2 + 1 {
                return Err(NovikovError::Invalid(format!(
                    "flow {} -> {} does not lower the index by one",
                    f.from, f.to
                )));
            }
            let cur = d[i].get(r, c).clone();
            d[i].set(r, c, lat.add(&cur, &lat.int_monomial(&f.class, f.count))?);
        }
        for i in 2..d.len() {
            let sq = d[i - 1].mul(lat, &d[i])?;
            if let Some(k) = sq.data.iter().position(|x| x.has_terms()) {
                let (r, c) = (k / sq.cols, k % sq.cols);
                return Err(NovikovError::NotAComplex {
                    from: groups[i][c].clone(),
                    to: groups[i - 2][r].clone(),
                });
            }
        }
        Ok(d)
    }
}

/// Homology of a Novikov complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum NovikovHomology {
    /// `Γ` trivial: `Λ = ℤ` and the groups are exact.
    Exact(Vec<FgAbGroup>),
    /// `Λ_ℚ` a field: dimensions per degree.
    Field(Vec<usize>),
    /// `ℤ` coefficients with nontrivial `Γ`: rank over the fraction field, and for each degree
    /// the leading contents left after eliminating all unit pivots from the incoming
    /// differential. These depend on the truncation `precision` and are not claimed to be
    /// invariant factors.
    Truncated {
        ranks: Vec<usize>,
        leading_content: Vec<Vec<BigInt>>,
        #[serde(serialize_with = "super::ring::rational_string")]
        precision: BigRational,
    },
}

impl NovikovHomology {
    pub fn ranks(&self) -> Vec<usize> {
        match self {
            NovikovHomology::Exact(g) => g.iter().map(|x| x.free_rank).collect(),
            NovikovHomology::Field(d) => d.clone(),
            NovikovHomology::Truncated { ranks, .. } => ranks.clone(),
        }
    }

    pub fn vanishes(&self) -> bool {
        match self {
            NovikovHomology::Exact(g) => g.iter().all(FgAbGroup::is_trivial),
            NovikovHomology::Field(d) => d.iter().all(|&x| x == 0),
            NovikovHomology::Truncated {
                ranks,
                leading_content,
                ..
            } => ranks.iter().all(|&x| x == 0) && leading_content.iter().all(Vec::is_empty),
        }
    }
}

fn ranks_of(
    lat: &CoeffLattice,
    d: &[NovMatrix],
    precision: &BigRational,
) -> Result<Vec<usize>, NovikovError> {
    let len = d.len();
    let rk: Vec<usize> = d
        .iter()
        .map(|m| rank(lat, m, precision))
        .collect::<Result<_, _>>()?;
    Ok((0..len)
        .map(|n| d[n].cols - rk[n] - if n + 1 < len { rk[n + 1] } else { 0 })
        .collect())
}

/// Eliminate unit pivots (leading coefficient `±1`) over `Λ_ℤ` to `precision`, then report
/// the positive leading coefficients of whatever nonzero entries remain.
fn residual_content(
    lat: &CoeffLattice,
    m: &NovMatrix,
    precision: &BigRational,
) -> Result<Vec<BigInt>, NovikovError> {
    let mut a = m.clone();
    let mut live_rows: Vec<usize> = (0..a.rows).collect();
    let mut live_cols: Vec<usize> = (0..a.cols).collect();
    loop {
        let mut found = None;
        'search: for &i in &live_rows {
            for &j in &live_cols {
                let x = a.get(i, j);
                if let Some(t) = lat.top(x) {
                    let lead: Vec<_> = x
                        .terms
                        .iter()
                        .filter(|(k, _)| lat.omega_of(k) == t)
                        .collect();
                    if lead.len() == 1
                        && lead[0].1.is_integer()
                        && lead[0].1.abs() == BigRational::from_integer(1.into())
                    {
                        found = Some((i, j));
                        break 'search;
                    }
                }
            }
        }
        let Some((pi, pj)) = found else { break };
        let inv = lat.invert(a.get(pi, pj), precision, Mode::Integer)?;
        for &i in &live_rows {
            if i == pi || a.get(i, pj).terms.is_empty() {
                continue;
            }
            let f = lat.mul(a.get(i, pj), &inv)?;
            for &j in &live_cols {
                let v = lat.sub(a.get(i, j), &lat.mul(&f, a.get(pi, j))?)?;
                a.set(i, j, lat.truncate(&v, precision));
            }
        }
        live_rows.retain(|&i| i != pi);
        live_cols.retain(|&j| j != pj);
    }
    let mut out = Vec::new();
    for &i in &live_rows {
        for &j in &live_cols {
            let x = a.get(i, j);
            if let Some(t) = lat.top(x) {
                let c: BigRational = x
                    .terms
                    .iter()
                    .filter(|(k, _)| lat.omega_of(k) == t)
                    .map(|(_, c)| c.clone())
                    .sum();
                out.push(c.abs().to_integer());
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn homology_of(
    lat: &CoeffLattice,
    d: &[NovMatrix],
    mode: Mode,
    precision: &BigRational,
) -> Result<NovikovHomology, NovikovError> {
    if lat.rank == 0 {
        if let Some(ints) = d.iter().map(NovMatrix::to_int).collect::<Option<Vec<_>>>() {
            let labels = ints
                .iter()
                .enumerate()
                .map(|(n, m)| numbered_labels(&format!("c{n}_"), m.cols()))
                .collect();
            let c = GradedComplex::new(labels, ints)
                .map_err(|e| NovikovError::Invalid(e.to_string()))?;
            return Ok(NovikovHomology::Exact(c.homology()));
        }
    }
    match mode {
        Mode::Field => {
            if !lat.is_field() {
                return Err(NovikovError::Unsupported(
                    "field mode needs Γ of rank one with ω ≠ 0 (then K = 0 and Λ_ℚ is a field)"
                        .into(),
                ));
            }
            Ok(NovikovHomology::Field(ranks_of(lat, d, precision)?))
        }
        Mode::Integer => {
            let ranks = ranks_of(lat, d, precision)?;
            let mut leading_content = Vec::new();
            for n in 0..d.len() {
                let content = if n + 1 < d.len() {
                    residual_content(lat, &d[n + 1], precision)?
                } else {
                    vec![]
                };
                leading_content.push(
                    content
                        .into_iter()
                        .filter(|c| c != &BigInt::from(1))
                        .collect(),
                );
            }
            Ok(NovikovHomology::Truncated {
                ranks,
                leading_content,
                precision: precision.clone(),
            })
        }
    }
}

pub fn novikov_homology(
    n: &NovikovComplexData,
    mode: Mode,
    precision: &BigRational,
) -> Result<NovikovHomology, NovikovError> {
    let d = n.boundary()?;
    homology_of(&n.lattice, &d, mode, precision)
}

/// Page dimensions over the fraction field of `Λ` for a filtered Novikov complex.
pub fn pages_over_field(
    lat: &CoeffLattice,
    levels: &[Vec<usize>],
    d: &[NovMatrix],
    r: usize,
    precision: &BigRational,
) -> Result<BTreeMap<(i64, i64), usize>, NovikovError> {
    let err = RefCell::new(None);
    let dims = page_dims_from_ranks(levels, r, |n, rows, cols| {
        match rank(lat, &d[n].select(rows, cols), precision) {
            Ok(k) => k,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0
            }
        }
    });
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(dims),
    }
}

/// Circle with a closed 1-form of period `−c` around the loop: a maximum `p`, a minimum `q`
/// and `∂p = (1 − e^A) q`. For `c = 0` the form is exact, `Γ` is trivial and `∂p = 0`.
pub fn circle_one_form(c: i64) -> NovikovComplexData {
    let (lattice, a, b) = if c == 0 {
        (CoeffLattice::trivial(), vec![], vec![])
    } else {
        (CoeffLattice::from_i64(&[-c]), vec![0], vec![1])
    };
    NovikovComplexData {
        lattice,
        critical_points: vec![
            CriticalPoint {
                label: "p".into(),
                index: 1,
            },
            CriticalPoint {
                label: "q".into(),
                index: 0,
            },
        ],
        flows: vec![
            NovikovFlow {
                from: "p".into(),
                to: "q".into(),
                class: a,
                count: 1,
            },
            NovikovFlow {
                from: "p".into(),
                to: "q".into(),
                class: b,
                count: -1,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::ring::rat;

    #[test]
    fn cancelling_leading_part_is_not_a_unit() {
        let mut n = circle_one_form(1);
        n.lattice = CoeffLattice::from_i64(&[0]);
        let h = novikov_homology(&n, Mode::Integer, &rat(-5)).unwrap();
        assert!(!h.vanishes(), "{h:?}");
    }

    #[test]
    fn circle_with_nonzero_class_is_acyclic() {
        for c in [1, 2, -3] {
            let n = circle_one_form(c);
            let h = novikov_homology(&n, Mode::Field, &rat(-10)).unwrap();
            assert!(h.vanishes());
            let h = novikov_homology(&n, Mode::Integer, &rat(-10)).unwrap();
            assert!(h.vanishes(), "{h:?}");
        }
    }

    #[test]
    fn two_times_unit_keeps_content_over_z() {
        let mut n = circle_one_form(1);
        for f in &mut n.flows {
            f.count *= 2;
        }
        assert!(novikov_homology(&n, Mode::Field, &rat(-8))
            .unwrap()
            .vanishes());
        for p in [-4, -8, -16] {
            match novikov_homology(&n, Mode::Integer, &rat(p)).unwrap() {
                NovikovHomology::Truncated {
                    ranks,
                    leading_content,
                    ..
                } => {
                    assert_eq!(ranks, vec![0, 0]);
                    assert_eq!(leading_content[0], vec![BigInt::from(2)]);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn exact_form_is_morse() {
        let m = crate::morse::circle_base();
        let n = NovikovComplexData::from_morse(&CoeffLattice::trivial(), &m);
        let h = novikov_homology(&n, Mode::Integer, &rat(0)).unwrap();
        assert_eq!(
            h,
            NovikovHomology::Exact(crate::morse::morse_homology(&m).unwrap())
        );
    }

    #[test]
    fn precision_exhaustion_is_reported() {
        let lat = CoeffLattice::from_i64(&[-1]);
        let mut m = NovMatrix::zeros(&lat, 1, 1);
        m.set(0, 0, lat.truncate(&lat.int_monomial(&[5], 1), &rat(-3)));
        assert!(matches!(
            rank(&lat, &m, &rat(-3)),
            Err(NovikovError::PrecisionExhausted(..))
        ));
    }
}
