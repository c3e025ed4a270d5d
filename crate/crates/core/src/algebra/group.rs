//! Finitely generated abelian groups and explicit quotient presentations `S / T` of subgroups
//! of ℤⁿ.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::lattice::{image, preimage, Subgroup};
use super::matrix::IntMatrix;
use super::smith::smith_normal_form;
use super::AlgebraError;

/// `ℤ^free_rank ⊕ ℤ/t₁ ⊕ … ⊕ ℤ/t_k` with `1 < t₁ | t₂ | … | t_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FgAbGroup {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl FgAbGroup {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn free(rank: usize) -> Self {
        FgAbGroup {
            free_rank: rank,
            torsion: Vec::new(),
        }
    }

    pub fn cyclic(order: i64) -> Self {
        Self::from_factors(&[BigInt::from(order)])
    }

    /// Group `⊕ ℤ/dᵢ` for arbitrary nonnegative `dᵢ` (0 meaning ℤ). Factors equal to 1 are
    /// dropped and the rest is brought into invariant-factor form.
    pub fn from_factors(factors: &[BigInt]) -> Self {
        let n = factors.len();
        let d = IntMatrix::diagonal(n, n, factors);
        let s = smith_normal_form(&d);
        let free_rank = s.d.iter().filter(|x| x.is_zero()).count();
        let torsion =
            s.d.into_iter()
                .filter(|x| !x.is_zero() && !x.is_one())
                .collect();
        FgAbGroup { free_rank, torsion }
    }

    pub fn from_i64(free_rank: usize, torsion: &[i64]) -> Self {
        let mut f: Vec<BigInt> = torsion.iter().map(|&t| BigInt::from(t)).collect();
        f.extend(std::iter::repeat_n(BigInt::zero(), free_rank));
        Self::from_factors(&f)
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn num_generators(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    pub fn direct_sum(&self, other: &FgAbGroup) -> FgAbGroup {
        let mut f: Vec<BigInt> = self.torsion.iter().chain(&other.torsion).cloned().collect();
        f.extend(std::iter::repeat_n(
            BigInt::zero(),
            self.free_rank + other.free_rank,
        ));
        Self::from_factors(&f)
    }

    pub fn torsion_i64(&self) -> Vec<i64> {
        self.torsion
            .iter()
            .map(|t| t.to_i64().unwrap_or(i64::MAX))
            .collect()
    }
}

impl fmt::Display for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for FgAbGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FgAbGroup", 2)?;
        st.serialize_field("free_rank", &self.free_rank)?;
        let tors: Vec<serde_json::Value> = self
            .torsion
            .iter()
            .map(|t| match t.to_i64() {
                Some(v) => serde_json::Value::from(v),
                None => serde_json::Value::from(t.to_string()),
            })
            .collect();
        st.serialize_field("torsion", &tors)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for FgAbGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        struct Repr {
            free_rank: usize,
            torsion: Vec<serde_json::Value>,
        }
        let r = Repr::deserialize(d)?;
        let mut f = Vec::new();
        for v in r.torsion {
            let x = match v {
                serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
                serde_json::Value::String(s) => s.parse().ok(),
                _ => None,
            }
            .ok_or_else(|| D::Error::custom("torsion entries must be integers"))?;
            if x <= BigInt::one() {
                return Err(D::Error::custom("torsion entries must exceed 1"));
            }
            f.push(x);
        }
        let g = FgAbGroup::from_factors(&f);
        if g.torsion != f {
            return Err(D::Error::custom("torsion must form a divisibility chain"));
        }
        Ok(FgAbGroup {
            free_rank: r.free_rank,
            torsion: g.torsion,
        })
    }
}

/// Explicit presentation of `S / T` for subgroups `T ⊆ S ⊆ ℤⁿ`.
///
/// Generators are ordered torsion first (in divisibility order) then free. Each generator has
/// a lift in `S`; `project` writes elements of `S` in these coordinates, with torsion
/// coordinates reduced into `[0, order)`.
#[derive(Clone, Debug)]
pub struct Quotient {
    group: FgAbGroup,
    sub: Subgroup,
    rel: Subgroup,
    // maps S-coordinates to Smith coordinates; only rows in `kept` matter
    u: IntMatrix,
    kept: Vec<usize>,
    orders: Vec<BigInt>,
    lifts: Vec<Vec<BigInt>>,
}

impl Quotient {
    pub fn new(s: &Subgroup, t: &Subgroup) -> Result<Quotient, AlgebraError> {
        if s.ambient_rank() != t.ambient_rank() {
            return Err(AlgebraError::AmbientMismatch(
                s.ambient_rank(),
                t.ambient_rank(),
            ));
        }
        let k = s.rank();
        let mut cols = Vec::with_capacity(t.rank());
        for g in t.generators() {
            cols.push(s.coordinates(g).ok_or(AlgebraError::NotContained)?);
        }
        let x = IntMatrix::from_columns(k, &cols);
        let snf = smith_normal_form(&x);
        let mut kept = Vec::new();
        let mut orders = Vec::new();
        for i in 0..k {
            let d = snf.d.get(i).cloned().unwrap_or_else(BigInt::zero);
            if !d.is_one() {
                kept.push(i);
                orders.push(d);
            }
        }
        let lifts = kept
            .iter()
            .map(|&i| s.combination(&snf.u_inv.column(i)))
            .collect();
        let free_rank = orders.iter().filter(|d| d.is_zero()).count();
        let torsion = orders.iter().filter(|d| !d.is_zero()).cloned().collect();
        Ok(Quotient {
            group: FgAbGroup { free_rank, torsion },
            sub: s.clone(),
            rel: t.clone(),
            u: snf.u,
            kept,
            orders,
            lifts,
        })
    }

    pub fn group(&self) -> &FgAbGroup {
        &self.group
    }

    pub fn ambient_rank(&self) -> usize {
        self.sub.ambient_rank()
    }

    pub fn numerator(&self) -> &Subgroup {
        &self.sub
    }

    pub fn relations(&self) -> &Subgroup {
        &self.rel
    }

    pub fn num_generators(&self) -> usize {
        self.kept.len()
    }

    /// Order of each presentation generator (0 for free generators).
    pub fn orders(&self) -> &[BigInt] {
        &self.orders
    }

    /// Representatives in `S` of the presentation generators.
    pub fn lifts(&self) -> &[Vec<BigInt>] {
        &self.lifts
    }

    pub fn lift(&self, coords: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(coords.len(), self.lifts.len());
        let mut out = vec![BigInt::zero(); self.ambient_rank()];
        for (c, l) in coords.iter().zip(&self.lifts) {
            if c.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(l) {
                *o += c * x;
            }
        }
        out
    }

    /// Coordinates of the class of `x ∈ S`.
    pub fn project(&self, x: &[BigInt]) -> Result<Vec<BigInt>, AlgebraError> {
        let c = self.sub.coordinates(x).ok_or(AlgebraError::NotInSubgroup)?;
        let mut out = Vec::with_capacity(self.kept.len());
        for (&i, d) in self.kept.iter().zip(&self.orders) {
            let row = self.u.row(i);
            let mut y = BigInt::zero();
            for (a, b) in row.iter().zip(&c) {
                if !a.is_zero() && !b.is_zero() {
                    y += a * b;
                }
            }
            if !d.is_zero() {
                y = y.mod_floor(d);
            }
            out.push(y);
        }
        Ok(out)
    }

    pub fn is_zero_class(&self, x: &[BigInt]) -> Result<bool, AlgebraError> {
        Ok(self.project(x)?.iter().all(Zero::is_zero))
    }

    /// Matrix of the homomorphism `self → target` induced by the ambient linear map `f`.
    /// Torsion rows are reduced modulo their orders.
    pub fn induced_matrix(
        &self,
        f: &IntMatrix,
        target: &Quotient,
    ) -> Result<IntMatrix, AlgebraError> {
        if f.cols() != self.ambient_rank() || f.rows() != target.ambient_rank() {
            return Err(AlgebraError::Shape(format!(
                "induced map: {}x{} matrix between ambients of rank {} and {}",
                f.rows(),
                f.cols(),
                self.ambient_rank(),
                target.ambient_rank()
            )));
        }
        let cols: Result<Vec<_>, _> = self
            .lifts
            .iter()
            .map(|l| target.project(&f.mul_vec(l)))
            .collect();
        Ok(IntMatrix::from_columns(target.num_generators(), &cols?))
    }

    /// Whether the ambient map `f` induces an isomorphism `self → target`. Requires `f` to
    /// send numerator into numerator and relations into relations (checked).
    pub fn induced_is_iso(&self, f: &IntMatrix, target: &Quotient) -> Result<bool, AlgebraError> {
        let fs = self.sub.map(f);
        let ft = self.rel.map(f);
        if !target.sub.contains_subgroup(&fs) || !target.rel.contains_subgroup(&ft) {
            return Err(AlgebraError::NotWellDefined);
        }
        let surjective = fs.sum(&target.rel)? == target.sub;
        if !surjective {
            return Ok(false);
        }
        let back = preimage(f, &target.rel)?.intersection(&self.sub)?;
        Ok(back == self.rel)
    }
}

/// Homology at the middle of `A --f_in--> B --f_out--> C` where each term is a presented group
/// `ℤ^k / Rel`: returns `f_out⁻¹(Rel_C) / (im f_in + Rel_B)`.
pub fn presented_homology(
    f_in: &IntMatrix,
    rel_mid: &Subgroup,
    f_out: &IntMatrix,
    rel_out: &Subgroup,
) -> Result<Quotient, AlgebraError> {
    let cycles = preimage(f_out, rel_out)?;
    let bounds = image(f_in).sum(rel_mid)?;
    Quotient::new(&cycles, &bounds)
}

/// `coker(a) = ℤ^rows / im(a)`.
pub fn cokernel(a: &IntMatrix) -> FgAbGroup {
    let s = smith_normal_form(a);
    let mut f: Vec<BigInt> = s.d.clone();
    f.extend(std::iter::repeat_n(
        BigInt::zero(),
        a.rows().saturating_sub(s.d.len()),
    ));
    FgAbGroup::from_factors(&f)
}

/// Kernel of `a` as an abstract (free) group.
pub fn kernel_group(a: &IntMatrix) -> FgAbGroup {
    FgAbGroup::free(a.cols() - smith_normal_form(a).rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::matrix::big_vec;

    fn sg(n: usize, gens: &[&[i64]]) -> Subgroup {
        Subgroup::from_generators(n, gens.iter().map(|g| big_vec(g)))
    }

    #[test]
    fn equal_subgroups_give_trivial_quotient() {
        let s = sg(2, &[&[1, 2], &[0, 3]]);
        assert!(Quotient::new(&s, &s).unwrap().group().is_trivial());
    }

    #[test]
    fn cyclic_of_order_six() {
        let q = Quotient::new(&Subgroup::full(2), &sg(2, &[&[2, 0], &[0, 3]])).unwrap();
        assert_eq!(*q.group(), FgAbGroup::from_i64(0, &[6]));
        // coset enumeration oracle: the 6 points of [0,2)x[0,3) are pairwise inequivalent and
        // their projections are pairwise distinct
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..2 {
            for b in 0..3 {
                seen.insert(q.project(&big_vec(&[a, b])).unwrap());
            }
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn quotient_by_antidiagonal_is_free() {
        let q = Quotient::new(&Subgroup::full(2), &sg(2, &[&[1, -1]])).unwrap();
        assert_eq!(*q.group(), FgAbGroup::free(1));
        // (1,0) and (0,1) become equal
        assert_eq!(
            q.project(&big_vec(&[1, 0])).unwrap(),
            q.project(&big_vec(&[0, 1])).unwrap()
        );
    }

    #[test]
    fn not_contained_is_rejected() {
        let r = Quotient::new(&sg(2, &[&[2, 0]]), &sg(2, &[&[1, 0]]));
        assert!(matches!(r, Err(AlgebraError::NotContained)));
    }

    #[test]
    fn lifts_project_to_unit_vectors() {
        let q = Quotient::new(&Subgroup::full(3), &sg(3, &[&[2, 4, 0], &[0, 6, 0]])).unwrap();
        assert_eq!(*q.group(), FgAbGroup::from_i64(1, &[2, 6]));
        for (k, l) in q.lifts().iter().enumerate() {
            let p = q.project(l).unwrap();
            for (i, x) in p.iter().enumerate() {
                assert_eq!(
                    *x,
                    if i == k {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                );
            }
        }
    }

    #[test]
    fn factors_normalize() {
        let g = FgAbGroup::from_i64(0, &[2, 3, 1]);
        assert_eq!(g.torsion, vec![BigInt::from(6)]);
        assert_eq!(g.to_string(), "Z/6");
        assert_eq!(FgAbGroup::from_i64(2, &[2]).to_string(), "Z^2 + Z/2");
        let j = serde_json::to_string(&FgAbGroup::from_i64(1, &[2, 4])).unwrap();
        assert_eq!(j, r#"{"free_rank":1,"torsion":[2,4]}"#);
        let back: FgAbGroup = serde_json::from_str(&j).unwrap();
        assert_eq!(back, FgAbGroup::from_i64(1, &[2, 4]));
        assert!(serde_json::from_str::<FgAbGroup>(r#"{"free_rank":0,"torsion":[4,2]}"#).is_err());
    }

    #[test]
    fn homology_of_small_complex() {
        // Z --2--> Z --0--> Z : H = (Z, Z/2, 0) from the top down
        let d2 = IntMatrix::from_rows(&[[2]]);
        let d1 = IntMatrix::from_rows(&[[0]]);
        let h1 =
            presented_homology(&d2, &Subgroup::trivial(1), &d1, &Subgroup::trivial(1)).unwrap();
        assert_eq!(*h1.group(), FgAbGroup::cyclic(2));
        assert_eq!(
            cokernel(&IntMatrix::from_rows(&[[2]])),
            FgAbGroup::cyclic(2)
        );
        assert_eq!(
            kernel_group(&IntMatrix::from_rows(&[[1, -1]])),
            FgAbGroup::free(1)
        );
    }

    #[test]
    fn iso_detection() {
        let q = Quotient::new(&Subgroup::full(1), &sg(1, &[&[4]])).unwrap();
        // multiplication by 3 is an automorphism of Z/4, by 2 is not
        assert!(q.induced_is_iso(&IntMatrix::from_rows(&[[3]]), &q).unwrap());
        assert!(!q.induced_is_iso(&IntMatrix::from_rows(&[[2]]), &q).unwrap());
        let m = q.induced_matrix(&IntMatrix::from_rows(&[[5]]), &q).unwrap();
        assert_eq!(m, IntMatrix::from_rows(&[[1]]));
    }
}
