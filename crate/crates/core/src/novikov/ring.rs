//! Truncated Novikov ring `Λ`: formal sums `Σ c_A e^A` over `A ∈ Γ` with only finitely
//! many terms above any `ω`-level, stored with an explicit precision floor.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{kernel, IntMatrix, Subgroup};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NovikovError {
    #[error("lattice mismatch: element of rank {found}, lattice of rank {expected}")]
    LatticeMismatch { expected: usize, found: usize },
    #[error("{0}")]
    NotAUnit(String),
    #[error("precision exhausted: {0}; retry with a lower floor than {1}")]
    PrecisionExhausted(String, BigRational),
    #[error("δ² ≠ 0 between {from} and {to}")]
    NotAComplex { from: String, to: String },
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Invalid(String),
}

/// `Γ = ℤ^rank` with the period homomorphism `ω : Γ → ℚ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffLattice {
    pub rank: usize,
    #[serde(with = "rational_list")]
    pub omega: Vec<BigRational>,
}

/// Arithmetic mode: `ℤ` coefficients (only `±1`-led elements invert) or the field `Λ_ℚ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Integer,
    Field,
}

impl CoeffLattice {
    pub fn new(omega: &[BigRational]) -> Self {
        CoeffLattice {
            rank: omega.len(),
            omega: omega.to_vec(),
        }
    }

    pub fn from_i64(omega: &[i64]) -> Self {
        Self::new(
            &omega
                .iter()
                .map(|&w| BigRational::from_integer(w.into()))
                .collect::<Vec<_>>(),
        )
    }

    /// Lattice with no classes: `Λ = ℤ`.
    pub fn trivial() -> Self {
        Self::new(&[])
    }

    pub fn omega_of(&self, a: &[i64]) -> BigRational {
        a.iter()
            .zip(&self.omega)
            .map(|(&x, w)| w * BigRational::from_integer(x.into()))
            .sum()
    }

    /// `K = ker ω` as a subgroup of `Γ`.
    pub fn kernel(&self) -> Subgroup {
        if self.rank == 0 {
            return Subgroup::trivial(0);
        }
        let den = self.omega.iter().fold(BigInt::one(), |acc, w| {
            num_integer::Integer::lcm(&acc, w.denom())
        });
        let row: Vec<BigInt> = self
            .omega
            .iter()
            .map(|w| (w * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        kernel(&IntMatrix::from_big_rows(vec![row], self.rank))
    }

    /// `Λ_ℚ` is a field exactly when `Γ` has rank one and `ω ≠ 0`.
    pub fn is_field(&self) -> bool {
        self.rank == 1 && !self.omega[0].is_zero()
    }

    /// `ω` vanishes identically.
    pub fn is_exact(&self) -> bool {
        self.omega.iter().all(Zero::is_zero)
    }

    fn check(&self, x: &NovikovElement) -> Result<(), NovikovError> {
        match x.terms.keys().next() {
            Some(k) if k.len() != self.rank => Err(NovikovError::LatticeMismatch {
                expected: self.rank,
                found: k.len(),
            }),
            _ => Ok(()),
        }
    }

    pub fn zero(&self) -> NovikovElement {
        NovikovElement {
            terms: BTreeMap::new(),
            floor: None,
        }
    }

    pub fn one(&self) -> NovikovElement {
        self.monomial(&vec![0; self.rank], BigRational::one())
    }

    pub fn monomial(&self, a: &[i64], c: BigRational) -> NovikovElement {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(a.to_vec(), c);
        }
        NovikovElement { terms, floor: None }
    }

    pub fn int_monomial(&self, a: &[i64], c: i64) -> NovikovElement {
        self.monomial(a, BigRational::from_integer(c.into()))
    }

    /// Drop terms at or below the floor.
    fn normalise(&self, mut x: NovikovElement) -> NovikovElement {
        x.terms.retain(|_, c| !c.is_zero());
        if let Some(f) = &x.floor {
            x.terms.retain(|a, _| &self.omega_of(a) > f);
        }
        x
    }

    /// Largest `ω`-value in the support.
    pub fn top(&self, x: &NovikovElement) -> Option<BigRational> {
        x.terms.keys().map(|a| self.omega_of(a)).max()
    }

    pub fn add(
        &self,
        x: &NovikovElement,
        y: &NovikovElement,
    ) -> Result<NovikovElement, NovikovError> {
        self.check(x)?;
        self.check(y)?;
        let mut terms = x.terms.clone();
        for (a, c) in &y.terms {
            *terms.entry(a.clone()).or_insert_with(BigRational::zero) += c;
        }
        let floor = max_floor(x.floor.clone(), y.floor.clone());
        Ok(self.normalise(NovikovElement { terms, floor }))
    }

    pub fn neg(&self, x: &NovikovElement) -> NovikovElement {
        NovikovElement {
            terms: x.terms.iter().map(|(a, c)| (a.clone(), -c)).collect(),
            floor: x.floor.clone(),
        }
    }

    pub fn sub(
        &self,
        x: &NovikovElement,
        y: &NovikovElement,
    ) -> Result<NovikovElement, NovikovError> {
        self.add(x, &self.neg(y))
    }

    /// Product; the floor is `max(π₁ + top(y), π₂ + top(x), π₁ + π₂)`, where an empty support
    /// contributes nothing but the other floor.
    pub fn mul(
        &self,
        x: &NovikovElement,
        y: &NovikovElement,
    ) -> Result<NovikovElement, NovikovError> {
        self.check(x)?;
        self.check(y)?;
        let mut terms: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
        for (a, c) in &x.terms {
            for (b, d) in &y.terms {
                let s: Vec<i64> = a.iter().zip(b).map(|(u, v)| u + v).collect();
                *terms.entry(s).or_insert_with(BigRational::zero) += c * d;
            }
        }
        let mut floor = None;
        if let Some(p1) = &x.floor {
            if let Some(t2) = self.top(y) {
                floor = max_floor(floor, Some(p1 + t2));
            }
            if let Some(p2) = &y.floor {
                floor = max_floor(floor, Some(p1 + p2));
            }
        }
        if let Some(p2) = &y.floor {
            if let Some(t1) = self.top(x) {
                floor = max_floor(floor, Some(p2 + t1));
            }
        }
        Ok(self.normalise(NovikovElement { terms, floor }))
    }

    pub fn scale(&self, x: &NovikovElement, c: &BigRational) -> NovikovElement {
        self.normalise(NovikovElement {
            terms: x.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect(),
            floor: x.floor.clone(),
        })
    }

    /// Multiply by the unit `e^A`; floors shift by `ω(A)`.
    pub fn shift(&self, x: &NovikovElement, a: &[i64]) -> NovikovElement {
        let w = self.omega_of(a);
        NovikovElement {
            terms: x
                .terms
                .iter()
                .map(|(b, c)| (b.iter().zip(a).map(|(u, v)| u + v).collect(), c.clone()))
                .collect(),
            floor: x.floor.as_ref().map(|f| f + w),
        }
    }

    /// Forget everything at or below `floor`.
    pub fn truncate(&self, x: &NovikovElement, floor: &BigRational) -> NovikovElement {
        self.normalise(NovikovElement {
            terms: x.terms.clone(),
            floor: max_floor(x.floor.clone(), Some(floor.clone())),
        })
    }

    /// Inverse by the geometric series, correct to `target` (or to the best floor the input
    /// allows, if that is higher). `u = c e^L (1 − v)` with every term of `v` below zero.
    pub fn invert(
        &self,
        u: &NovikovElement,
        target: &BigRational,
        mode: Mode,
    ) -> Result<NovikovElement, NovikovError> {
        self.check(u)?;
        let top = self.top(u).ok_or_else(|| {
            NovikovError::NotAUnit("zero (to the known precision) is not invertible".into())
        })?;
        let leading: Vec<(&Vec<i64>, &BigRational)> = u
            .terms
            .iter()
            .filter(|(a, _)| self.omega_of(a) == top)
            .collect();
        if leading.len() != 1 {
            return Err(NovikovError::NotAUnit(format!(
                "{} terms share the leading value ω = {top}; leading part is not a monomial",
                leading.len()
            )));
        }
        let (l, c) = (leading[0].0.clone(), leading[0].1.clone());
        if mode == Mode::Integer && !(c.is_integer() && c.abs().is_one()) {
            return Err(NovikovError::NotAUnit(format!(
                "leading coefficient {c} is not ±1 over ℤ"
            )));
        }
        let neg_l: Vec<i64> = l.iter().map(|x| -x).collect();
        let cinv = c.recip();
        // w = 1 − u / (c e^L): terms strictly below ω = 0
        let normed = self.scale(&self.shift(u, &neg_l), &cinv);
        let w = self.sub(&self.one(), &normed)?;
        // result = c⁻¹ e^{−L} Σ wᵏ; work at the shifted target floor
        let work = target + &top;
        let gap = self.top(&w);
        let mut sum = self.one();
        if let Some(g) = gap {
            let mut power = self.one();
            loop {
                power = self.truncate(&self.mul(&power, &w)?, &work);
                if power.terms.is_empty() {
                    if let Some(f) = &power.floor {
                        sum.floor = max_floor(sum.floor.clone(), Some(f.clone()));
                    }
                    break;
                }
                sum = self.add(&sum, &power)?;
                debug_assert!(g.is_negative());
            }
        }
        // the input's own floor limits what the series can know
        if let Some(f) = &w.floor {
            sum.floor = max_floor(sum.floor.clone(), Some(f.clone()));
        }
        sum = self.truncate(&sum, &work);
        Ok(self.normalise(self.scale(&self.shift(&sum, &neg_l), &cinv)))
    }

    /// Whether `x` equals `y` on every term above `floor`.
    pub fn agree_above(&self, x: &NovikovElement, y: &NovikovElement, floor: &BigRational) -> bool {
        let d = self.sub(x, y).map(|d| self.truncate(&d, floor));
        matches!(d, Ok(d) if d.terms.is_empty())
    }
}

fn max_floor(a: Option<BigRational>, b: Option<BigRational>) -> Option<BigRational> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.max(y)),
    }
}

/// `Σ c_A e^A`, known modulo terms with `ω(A) ≤ floor` (`None` means exact).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovikovElement {
    pub terms: BTreeMap<Vec<i64>, BigRational>,
    pub floor: Option<BigRational>,
}

impl NovikovElement {
    pub fn is_exact(&self) -> bool {
        self.floor.is_none()
    }

    /// No known term; the element is zero or unknown below its floor.
    pub fn is_known_zero(&self) -> bool {
        self.terms.is_empty() && self.floor.is_none()
    }

    pub fn has_terms(&self) -> bool {
        !self.terms.is_empty()
    }
}

impl fmt::Display for NovikovElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (k, (a, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·e^{a:?}")?;
        }
        if let Some(p) = &self.floor {
            write!(f, " + O(ω ≤ {p})")?;
        }
        Ok(())
    }
}

/// Serialised form: `{rank, omega, terms: [{A, c}], floor}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub rank: usize,
    #[serde(with = "rational_list")]
    pub omega: Vec<BigRational>,
    pub terms: Vec<TermJson>,
    pub floor: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    #[serde(rename = "A")]
    pub a: Vec<i64>,
    pub c: String,
}

impl ElementJson {
    pub fn from_element(lat: &CoeffLattice, x: &NovikovElement) -> Self {
        ElementJson {
            rank: lat.rank,
            omega: lat.omega.clone(),
            terms: x
                .terms
                .iter()
                .map(|(a, c)| TermJson {
                    a: a.clone(),
                    c: c.to_string(),
                })
                .collect(),
            floor: x
                .floor
                .as_ref()
                .map_or("-inf".to_string(), |f| f.to_string()),
        }
    }

    pub fn to_element(&self) -> Result<(CoeffLattice, NovikovElement), NovikovError> {
        if self.omega.len() != self.rank {
            return Err(NovikovError::Invalid("omega has the wrong length".into()));
        }
        let lat = CoeffLattice::new(&self.omega);
        let mut terms = BTreeMap::new();
        for t in &self.terms {
            if t.a.len() != self.rank {
                return Err(NovikovError::LatticeMismatch {
                    expected: self.rank,
                    found: t.a.len(),
                });
            }
            let c: BigRational =
                t.c.parse()
                    .map_err(|_| NovikovError::Invalid(format!("bad coefficient {:?}", t.c)))?;
            if terms.insert(t.a.clone(), c).is_some() {
                return Err(NovikovError::Invalid("repeated support key".into()));
            }
        }
        let floor = if self.floor == "-inf" {
            None
        } else {
            Some(
                self.floor
                    .parse()
                    .map_err(|_| NovikovError::Invalid(format!("bad floor {:?}", self.floor)))?,
            )
        };
        let x = NovikovElement { terms, floor };
        if let Some(f) = &x.floor {
            if x.terms.keys().any(|a| &lat.omega_of(a) <= f) {
                return Err(NovikovError::Invalid(
                    "a term lies at or below the floor".into(),
                ));
            }
        }
        Ok((lat, x))
    }
}

pub(crate) mod rational_list {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| serde::de::Error::custom(format!("bad rational {s:?}")))
            })
            .collect()
    }
}

pub(crate) fn rational_string<S: serde::Serializer>(
    v: &BigRational,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}
