//! Combinatorial Morse data, continuation maps and homology with local coefficients.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    cokernel, kernel_group, presented_homology, FgAbGroup, IntMatrix, Quotient, Subgroup,
};
use crate::complexes::{
    verify_chain_map, verify_homotopy, ChainMap, ComplexError, GradedComplex, GradedMap, MapError,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalPoint {
    pub label: String,
    pub index: usize,
}

/// Signed count of flow lines from `from` (index `k`) to `to` (index `k − 1`). Several
/// records for the same pair are summed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    pub from: String,
    pub to: String,
    pub count: i64,
}

/// Critical points with indices and signed flow counts. `orientation` names the convention
/// that produced the signs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseData {
    pub critical_points: Vec<CriticalPoint>,
    pub flows: Vec<Flow>,
    #[serde(default = "default_orientation")]
    pub orientation: String,
}

fn default_orientation() -> String {
    "standard".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MorseError {
    #[error("duplicate critical point label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown critical point {0:?}")]
    UnknownLabel(String),
    #[error("flow {from} -> {to} does not lower the index by one")]
    IndexGap { from: String, to: String },
    #[error("d∘d ≠ 0 between {from} and {to} (coefficient {coefficient})")]
    NotAComplex {
        from: String,
        to: String,
        coefficient: BigInt,
    },
    #[error("{0}")]
    Invalid(String),
}

impl MorseData {
    pub fn new(points: &[(&str, usize)], flows: &[(&str, &str, i64)]) -> Self {
        MorseData {
            critical_points: points
                .iter()
                .map(|&(l, i)| CriticalPoint {
                    label: l.to_string(),
                    index: i,
                })
                .collect(),
            flows: flows
                .iter()
                .map(|&(a, b, c)| Flow {
                    from: a.to_string(),
                    to: b.to_string(),
                    count: c,
                })
                .collect(),
            orientation: default_orientation(),
        }
    }

    /// A single critical point of index 0.
    pub fn point() -> Self {
        Self::new(&[("pt", 0)], &[])
    }

    pub fn top_index(&self) -> usize {
        self.critical_points
            .iter()
            .map(|c| c.index)
            .max()
            .unwrap_or(0)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.critical_points
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.index)
    }

    /// Labels grouped by index, in listed order; the position of a label in its group is its
    /// basis position in the Morse complex.
    pub fn by_index(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.top_index() + 1];
        for c in &self.critical_points {
            out[c.index].push(c.label.clone());
        }
        out
    }

    /// `label ↦ (index, position within index)`.
    pub fn positions(&self) -> HashMap<String, (usize, usize)> {
        let mut out = HashMap::new();
        for (i, labels) in self.by_index().into_iter().enumerate() {
            for (k, l) in labels.into_iter().enumerate() {
                out.insert(l, (i, k));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), MorseError> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.critical_points {
            if !seen.insert(c.label.as_str()) {
                return Err(MorseError::DuplicateLabel(c.label.clone()));
            }
        }
        for f in &self.flows {
            let a = self
                .index_of(&f.from)
                .ok_or_else(|| MorseError::UnknownLabel(f.from.clone()))?;
            let b = self
                .index_of(&f.to)
                .ok_or_else(|| MorseError::UnknownLabel(f.to.clone()))?;
            if a != b + 1 {
                return Err(MorseError::IndexGap {
                    from: f.from.clone(),
                    to: f.to.clone(),
                });
            }
        }
        Ok(())
    }

    /// Boundary matrices `∂_i` (rows: index `i−1`, columns: index `i`) for `i = 0..=top`.
    pub fn boundary_matrices(&self) -> Result<Vec<IntMatrix>, MorseError> {
        self.validate()?;
        let groups = self.by_index();
        let pos = self.positions();
        let mut d: Vec<IntMatrix> = (0..groups.len())
            .map(|i| {
                IntMatrix::zeros(
                    if i == 0 { 0 } else { groups[i - 1].len() },
                    groups[i].len(),
                )
            })
            .collect();
        for f in &self.flows {
            let (i, c) = pos[&f.from];
            let (_, r) = pos[&f.to];
            d[i][(r, c)] += BigInt::from(f.count);
        }
        Ok(d)
    }

    /// Flip the orientation of one critical point: every count involving it changes sign.
    pub fn flip(&self, label: &str) -> MorseData {
        let mut m = self.clone();
        for f in &mut m.flows {
            if (f.from == label) != (f.to == label) {
                f.count = -f.count;
            }
        }
        m.orientation = format!("{}+flip({label})", self.orientation);
        m
    }
}

/// The Morse complex, rejecting data with `∂² ≠ 0`.
pub fn morse_complex(m: &MorseData) -> Result<GradedComplex, MorseError> {
    let d = m.boundary_matrices()?;
    GradedComplex::new(m.by_index(), d).map_err(|e| match e {
        ComplexError::NotAComplex {
            source_label,
            target_label,
            coefficient,
            ..
        } => MorseError::NotAComplex {
            from: source_label,
            to: target_label,
            coefficient,
        },
        other => MorseError::Invalid(other.to_string()),
    })
}

pub fn morse_homology(m: &MorseData) -> Result<Vec<FgAbGroup>, MorseError> {
    Ok(morse_complex(m)?.homology())
}

/// Degree-preserving map between two Morse complexes, `phi[i]` acting on index `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationData {
    pub source: MorseData,
    pub target: MorseData,
    pub phi: Vec<IntMatrix>,
}

impl ContinuationData {
    pub fn identity(m: &MorseData) -> Self {
        let phi = m
            .by_index()
            .iter()
            .map(|g| IntMatrix::identity(g.len()))
            .collect();
        ContinuationData {
            source: m.clone(),
            target: m.clone(),
            phi,
        }
    }

    pub fn chain_map(&self) -> ChainMap {
        GradedMap::new(0, self.phi.clone())
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &ContinuationData) -> ContinuationData {
        let len = self.phi.len().max(next.phi.len());
        let a = morse_complex(&self.source).expect("valid source");
        let b = morse_complex(&self.target).expect("valid target");
        let c = morse_complex(&next.target).expect("valid target");
        let phi = (0..len)
            .map(|i| {
                next.chain_map()
                    .at(i, &b, &c)
                    .mul(&self.chain_map().at(i, &a, &b))
            })
            .collect();
        ContinuationData {
            source: self.source.clone(),
            target: next.target.clone(),
            phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContinuationError {
    #[error(transparent)]
    Morse(#[from] MorseError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Checks that `Φ` is a chain map.
pub fn verify_continuation(c: &ContinuationData) -> Result<(), ContinuationError> {
    let s = morse_complex(&c.source)?;
    let t = morse_complex(&c.target)?;
    verify_chain_map(&c.chain_map(), &s, &t)?;
    Ok(())
}

/// Checks `∂K + K∂ = Φ₀ − Φ₁` for two continuations with the same ends.
pub fn verify_continuation_homotopy(
    a: &ContinuationData,
    b: &ContinuationData,
    k: &[IntMatrix],
) -> Result<(), ContinuationError> {
    let s = morse_complex(&a.source)?;
    let t = morse_complex(&a.target)?;
    verify_homotopy(
        &GradedMap::new(1, k.to_vec()),
        &a.chain_map(),
        &b.chain_map(),
        &s,
        &t,
    )?;
    Ok(())
}

/// A stalk `ℤ^gens / relations` in one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stalk {
    pub gens: usize,
    pub relations: Subgroup,
}

impl Stalk {
    pub fn free(n: usize) -> Self {
        Stalk {
            gens: n,
            relations: Subgroup::trivial(n),
        }
    }

    /// Stalk presented by generator orders (0 for free generators).
    pub fn from_orders(orders: &[BigInt]) -> Self {
        let n = orders.len();
        let rel = Subgroup::from_generators(
            n,
            orders.iter().enumerate().map(|(k, d)| {
                let mut v = vec![BigInt::from(0); n];
                v[k] = d.clone();
                v
            }),
        );
        Stalk {
            gens: n,
            relations: rel,
        }
    }

    pub fn group(&self) -> FgAbGroup {
        Quotient::new(&Subgroup::full(self.gens), &self.relations)
            .expect("relations in ambient")
            .group()
            .clone()
    }

    fn quotient(&self) -> Quotient {
        Quotient::new(&Subgroup::full(self.gens), &self.relations).expect("relations in ambient")
    }
}

/// One base flow line together with the induced map on stalks, per fiber degree. The flow's
/// sign is folded into the matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportLine {
    pub from: String,
    pub to: String,
    pub maps: Vec<IntMatrix>,
}

/// Locally constant coefficients over a Morse base: stalks at base critical points in each
/// fiber degree, and transports along the base flow lines.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    base: MorseData,
    stalks: BTreeMap<String, Vec<Stalk>>,
    lines: Vec<TransportLine>,
    degrees: usize,
}

impl LocalSystem {
    /// Validates shapes, compatibility with the relations, and invertibility of every
    /// transport (up to sign).
    pub fn new(
        base: MorseData,
        stalks: BTreeMap<String, Vec<Stalk>>,
        lines: Vec<TransportLine>,
    ) -> Result<Self, MorseError> {
        Self::build(base, stalks, lines, true)
    }

    /// As [`LocalSystem::new`] but without requiring the transports to be invertible; the
    /// twisted complex is still defined, it just need not compute homology with local
    /// coefficients.
    pub fn new_unchecked(
        base: MorseData,
        stalks: BTreeMap<String, Vec<Stalk>>,
        lines: Vec<TransportLine>,
    ) -> Result<Self, MorseError> {
        Self::build(base, stalks, lines, false)
    }

    fn build(
        base: MorseData,
        stalks: BTreeMap<String, Vec<Stalk>>,
        lines: Vec<TransportLine>,
        check_iso: bool,
    ) -> Result<Self, MorseError> {
        base.validate()?;
        let degrees = stalks.values().map(Vec::len).max().unwrap_or(0);
        for c in &base.critical_points {
            let s = stalks
                .get(&c.label)
                .ok_or_else(|| MorseError::UnknownLabel(c.label.clone()))?;
            if s.len() != degrees {
                return Err(MorseError::Invalid(format!(
                    "stalk at {} has {} degrees, expected {degrees}",
                    c.label,
                    s.len()
                )));
            }
        }
        for line in &lines {
            let a = base
                .index_of(&line.from)
                .ok_or_else(|| MorseError::UnknownLabel(line.from.clone()))?;
            let b = base
                .index_of(&line.to)
                .ok_or_else(|| MorseError::UnknownLabel(line.to.clone()))?;
            if a != b + 1 {
                return Err(MorseError::IndexGap {
                    from: line.from.clone(),
                    to: line.to.clone(),
                });
            }
            if line.maps.len() != degrees {
                return Err(MorseError::Invalid(format!(
                    "transport {}->{} has wrong degree count",
                    line.from, line.to
                )));
            }
            for (j, m) in line.maps.iter().enumerate() {
                let src = &stalks[&line.from][j];
                let dst = &stalks[&line.to][j];
                if m.shape() != (dst.gens, src.gens) {
                    return Err(MorseError::Invalid(format!(
                        "transport {}->{} degree {j}: bad shape",
                        line.from, line.to
                    )));
                }
                let iso = src.quotient().induced_is_iso(m, &dst.quotient());
                if iso.is_err() {
                    return Err(MorseError::Invalid(format!(
                        "transport {}->{} in degree {j} does not respect the relations",
                        line.from, line.to
                    )));
                }
                if check_iso && iso != Ok(true) {
                    return Err(MorseError::Invalid(format!(
                        "transport {}->{} in degree {j} is not an isomorphism of stalks",
                        line.from, line.to
                    )));
                }
            }
        }
        Ok(LocalSystem {
            base,
            stalks,
            lines,
            degrees,
        })
    }

    pub fn base(&self) -> &MorseData {
        &self.base
    }

    pub fn degrees(&self) -> usize {
        self.degrees
    }

    pub fn lines(&self) -> &[TransportLine] {
        &self.lines
    }

    /// Twisted boundary `C_i(B; F_j) → C_{i−1}(B; F_j)` and the stalk relations of both ends.
    fn twisted(&self, i: usize, j: usize) -> (IntMatrix, Subgroup, Subgroup) {
        let groups = self.base.by_index();
        let offsets = |k: usize| -> (Vec<usize>, usize) {
            let mut offs = Vec::new();
            let mut total = 0;
            if let Some(g) = groups.get(k) {
                for l in g {
                    offs.push(total);
                    total += self.stalks[l][j].gens;
                }
            }
            (offs, total)
        };
        let rel = |k: usize| -> Subgroup {
            let (offs, total) = offsets(k);
            let mut gens = Vec::new();
            if let Some(g) = groups.get(k) {
                for (l, &o) in g.iter().zip(&offs) {
                    for r in self.stalks[l][j].relations.generators() {
                        let mut v = vec![BigInt::from(0); total];
                        v[o..o + r.len()].clone_from_slice(r);
                        gens.push(v);
                    }
                }
            }
            Subgroup::from_generators(total, gens)
        };
        let (src_offs, src_total) = offsets(i);
        let (dst_offs, dst_total) = if i == 0 { (vec![], 0) } else { offsets(i - 1) };
        let mut d = IntMatrix::zeros(dst_total, src_total);
        if i > 0 {
            let pos = self.base.positions();
            for line in &self.lines {
                let (a, ca) = pos[&line.from];
                if a != i {
                    continue;
                }
                let (_, cb) = pos[&line.to];
                d.add_block(dst_offs[cb], src_offs[ca], &line.maps[j]);
            }
        }
        let rel_below = if i == 0 {
            Subgroup::trivial(0)
        } else {
            rel(i - 1)
        };
        (d, rel(i), rel_below)
    }

    /// `H_i(B; F_j)` keyed by `(i, j)`, nontrivial groups only.
    pub fn homology(&self) -> BTreeMap<(i64, i64), FgAbGroup> {
        let top = self.base.top_index();
        let mut out = BTreeMap::new();
        for j in 0..self.degrees {
            for i in 0..=top {
                let (d_out, rel_mid, rel_out) = self.twisted(i, j);
                let d_in = if i < top {
                    self.twisted(i + 1, j).0
                } else {
                    IntMatrix::zeros(d_out.cols(), 0)
                };
                let h = presented_homology(&d_in, &rel_mid, &d_out, &rel_out)
                    .expect("local system well defined");
                if !h.group().is_trivial() {
                    out.insert((i as i64, j as i64), h.group().clone());
                }
            }
        }
        out
    }

    /// Composite transport along a word of flow lines in degree `j`; `(k, true)` traverses
    /// line `k` forwards, `(k, false)` backwards (using the inverse). Endpoints must chain.
    pub fn loop_transport(
        &self,
        word: &[(usize, bool)],
        j: usize,
    ) -> Result<IntMatrix, MorseError> {
        let mut acc: Option<(IntMatrix, String)> = None;
        for &(k, forward) in word {
            let line = self
                .lines
                .get(k)
                .ok_or_else(|| MorseError::Invalid(format!("no flow line {k}")))?;
            let (m, start, end) = if forward {
                (line.maps[j].clone(), &line.from, &line.to)
            } else {
                let inv = crate::algebra::unimodular_inverse(&line.maps[j]).ok_or_else(|| {
                    MorseError::Invalid(format!("transport {k} not invertible over Z"))
                })?;
                (inv, &line.to, &line.from)
            };
            acc = Some(match acc {
                None => (m, end.clone()),
                Some((a, at)) => {
                    if &at != start {
                        return Err(MorseError::Invalid(format!(
                            "word breaks at {at} vs {start}"
                        )));
                    }
                    (m.mul(&a), end.clone())
                }
            });
        }
        acc.map(|(m, _)| m)
            .ok_or_else(|| MorseError::Invalid("empty word".into()))
    }
}

/// `(coker(1 − Φ), ker(1 − Φ))` for an automorphism `Φ` of `ℤⁿ`.
pub fn circle_monodromy(phi: &IntMatrix) -> Result<(FgAbGroup, FgAbGroup), MorseError> {
    if phi.rows() != phi.cols() || num_traits::Signed::abs(&phi.determinant()) != BigInt::from(1) {
        return Err(MorseError::Invalid(
            "monodromy must be an invertible square matrix".into(),
        ));
    }
    let m = IntMatrix::identity(phi.rows()).sub(phi);
    Ok((cokernel(&m), kernel_group(&m)))
}

/// Base circle with one maximum `x0` and one minimum `x1`, joined by two flow lines with
/// opposite signs (`+1` first).
pub fn circle_base() -> MorseData {
    MorseData::new(
        &[("x0", 1), ("x1", 0)],
        &[("x0", "x1", 1), ("x0", "x1", -1)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_sphere_torus() {
        assert_eq!(
            morse_homology(&circle_base()).unwrap(),
            vec![FgAbGroup::free(1); 2]
        );
        let s2 = MorseData::new(&[("max", 2), ("min", 0)], &[]);
        assert_eq!(
            morse_homology(&s2).unwrap(),
            vec![FgAbGroup::free(1), FgAbGroup::trivial(), FgAbGroup::free(1)]
        );
        let t2 = MorseData::new(
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
        );
        assert_eq!(
            morse_homology(&t2).unwrap(),
            vec![FgAbGroup::free(1), FgAbGroup::free(2), FgAbGroup::free(1)]
        );
    }

    #[test]
    fn rejects_bad_data() {
        let bad = MorseData::new(
            &[("a", 2), ("b", 1), ("c", 0)],
            &[("a", "b", 1), ("b", "c", 1)],
        );
        assert!(matches!(
            morse_complex(&bad),
            Err(MorseError::NotAComplex { .. })
        ));
        let gap = MorseData::new(&[("a", 2), ("c", 0)], &[("a", "c", 1)]);
        assert!(matches!(gap.validate(), Err(MorseError::IndexGap { .. })));
    }

    #[test]
    fn continuation_checks() {
        let m = circle_base();
        verify_continuation(&ContinuationData::identity(&m)).unwrap();
        let rp = MorseData::new(&[("a", 1), ("b", 0)], &[("a", "b", 2)]);
        let mut c = ContinuationData::identity(&rp);
        c.phi[1] = IntMatrix::from_rows(&[[3]]);
        assert!(verify_continuation(&c).is_err());
    }

    #[test]
    fn monodromy_formulas() {
        let (c, k) = circle_monodromy(&IntMatrix::from_rows(&[[-1]])).unwrap();
        assert_eq!((c, k), (FgAbGroup::cyclic(2), FgAbGroup::trivial()));
        let (c, k) = circle_monodromy(&IntMatrix::from_rows(&[[1, 1], [0, 1]])).unwrap();
        assert_eq!((c, k), (FgAbGroup::free(1), FgAbGroup::free(1)));
        let (c, k) = circle_monodromy(&IntMatrix::identity(2)).unwrap();
        assert_eq!((c, k), (FgAbGroup::free(2), FgAbGroup::free(2)));
        assert!(circle_monodromy(&IntMatrix::from_rows(&[[2]])).is_err());
    }

    fn circle_system(phi: IntMatrix) -> LocalSystem {
        let n = phi.rows();
        let stalks = BTreeMap::from([
            ("x0".to_string(), vec![Stalk::free(n)]),
            ("x1".to_string(), vec![Stalk::free(n)]),
        ]);
        let lines = vec![
            TransportLine {
                from: "x0".into(),
                to: "x1".into(),
                maps: vec![IntMatrix::identity(n)],
            },
            TransportLine {
                from: "x0".into(),
                to: "x1".into(),
                maps: vec![phi.neg()],
            },
        ];
        LocalSystem::new(circle_base(), stalks, lines).unwrap()
    }

    #[test]
    fn local_coefficients_on_circle() {
        let h = circle_system(IntMatrix::from_rows(&[[-1]])).homology();
        assert_eq!(h, BTreeMap::from([((0, 0), FgAbGroup::cyclic(2))]));
        let h = circle_system(IntMatrix::from_rows(&[[0, 1], [1, 0]])).homology();
        assert_eq!(
            h,
            BTreeMap::from([((0, 0), FgAbGroup::free(1)), ((1, 0), FgAbGroup::free(1))])
        );
        let h = circle_system(IntMatrix::identity(1)).homology();
        assert_eq!(
            h,
            BTreeMap::from([((0, 0), FgAbGroup::free(1)), ((1, 0), FgAbGroup::free(1))])
        );
    }

    #[test]
    fn loop_word_composes() {
        let s = circle_system(IntMatrix::from_rows(&[[0, 1], [1, 0]]));
        // out along line 0, back along line 1: (-swap)^{-1} * id = -swap
        let m = s.loop_transport(&[(0, true), (1, false)], 0).unwrap();
        assert_eq!(m, IntMatrix::from_rows(&[[0, -1], [-1, 0]]));
        assert!(s.loop_transport(&[(0, true), (1, true)], 0).is_err());
    }
}
