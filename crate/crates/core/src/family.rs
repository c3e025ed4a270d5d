//! Family complexes built from Morse data on the base and fiberwise Morse data at base critical
//! points.
//!
//! Generators are pairs `(x, p)` with `x` a base critical point of index `i` and `p` a critical
//! point of the fiber function at `x` of index `j`; the total degree is `i + j` and the
//! filtration level is `i`. The differential is `δ = Σ_k δ_k` with
//! `δ_k : C_{i,j} → C_{i−k, j+k−1}`; `δ₀` at `x` is `(−1)^i` times the fiber Morse
//! differential and the higher pieces are given as blocks.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::{FgAbGroup, IntMatrix, Quotient};
use crate::complexes::{
    induces_homology_iso, verify_filtered_chain_map, ChainMap, ComplexError, FilteredComplex,
    GradedComplex, GradedMap,
};
use crate::morse::{morse_complex, Flow, LocalSystem, MorseData, MorseError, Stalk, TransportLine};
use crate::spectral::{homology_graded, is_page_iso, rational_page_dims, SpectralSequence};

/// One higher piece `δ_k[x → y]`. Rows index the fiber critical points at `y`, columns those
/// at `x`, both in fiber order (grouped by index, ascending, listing order within an index).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub k: usize,
    pub from_x: String,
    pub to_y: String,
    pub matrix: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    pub base: MorseData,
    pub dim_base: usize,
    pub fiber_dim: usize,
    pub fibers: BTreeMap<String, MorseData>,
    pub blocks: Vec<Block>,
    #[serde(default = "default_true")]
    pub oriented_fibers: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error(transparent)]
    Morse(#[from] MorseError),
    #[error("no fiber data at base critical point {0:?}")]
    MissingFiber(String),
    #[error("block {index} ({from} -> {to}, k = {k}): {reason}")]
    BadBlock {
        index: usize,
        from: String,
        to: String,
        k: usize,
        reason: String,
    },
    #[error("δ² ≠ 0: {from} reaches {to} with coefficient {coefficient}")]
    NotAComplex {
        from: String,
        to: String,
        coefficient: BigInt,
    },
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Invalid(String),
}

/// Fiber critical points grouped by index, flattened.
pub fn fiber_order(m: &MorseData) -> Vec<(String, usize)> {
    m.by_index()
        .into_iter()
        .enumerate()
        .flat_map(|(j, ls)| ls.into_iter().map(move |l| (l, j)))
        .collect()
}

pub fn gen_label(x: &str, p: &str) -> String {
    format!("({x},{p})")
}

impl FamilyDescriptor {
    pub fn validate(&self) -> Result<(), FamilyError> {
        self.base.validate()?;
        for c in &self.base.critical_points {
            let f = self
                .fibers
                .get(&c.label)
                .ok_or_else(|| FamilyError::MissingFiber(c.label.clone()))?;
            f.validate()?;
            if f.top_index() > self.fiber_dim && !f.critical_points.is_empty() {
                return Err(FamilyError::Invalid(format!(
                    "fiber at {} has index above fiber dimension",
                    c.label
                )));
            }
        }
        if self.base.top_index() > self.dim_base {
            return Err(FamilyError::Invalid(
                "base index above base dimension".into(),
            ));
        }
        for (n, b) in self.blocks.iter().enumerate() {
            let bad = |reason: String| FamilyError::BadBlock {
                index: n,
                from: b.from_x.clone(),
                to: b.to_y.clone(),
                k: b.k,
                reason,
            };
            if b.k == 0 {
                return Err(bad(
                    "δ₀ comes from the fiber data and cannot be given as a block".into(),
                ));
            }
            if b.k > self.dim_base {
                return Err(bad("k exceeds the base dimension".into()));
            }
            let i = self
                .base
                .index_of(&b.from_x)
                .ok_or_else(|| bad("unknown source".into()))?;
            let i2 = self
                .base
                .index_of(&b.to_y)
                .ok_or_else(|| bad("unknown target".into()))?;
            if i < b.k || i2 != i - b.k {
                return Err(bad("base indices do not differ by k".into()));
            }
            if b.k == 1
                && !self
                    .base
                    .flows
                    .iter()
                    .any(|f| f.from == b.from_x && f.to == b.to_y)
            {
                return Err(bad("δ₁ block without a base flow line".into()));
            }
            let src = fiber_order(&self.fibers[&b.from_x]);
            let dst = fiber_order(&self.fibers[&b.to_y]);
            if b.matrix.shape() != (dst.len(), src.len()) {
                return Err(bad(format!(
                    "matrix shape {:?}, expected {:?}",
                    b.matrix.shape(),
                    (dst.len(), src.len())
                )));
            }
            for (c, (_, j)) in src.iter().enumerate() {
                for (r, (_, j2)) in dst.iter().enumerate() {
                    if !b.matrix[(r, c)].is_zero() && *j2 != j + b.k - 1 {
                        return Err(bad(format!(
                            "entry ({r},{c}) maps fiber degree {j} to {j2}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Base critical point at generator level `i` for each label.
    fn base_index(&self) -> HashMap<String, usize> {
        self.base
            .critical_points
            .iter()
            .map(|c| (c.label.clone(), c.index))
            .collect()
    }

    /// Generators per total degree: `(x, p, i, j)`, ordered by base listing then fiber order.
    pub fn generators(&self) -> Vec<Vec<FamilyGen>> {
        let top = self.dim_base + self.fiber_dim;
        let mut out = vec![Vec::new(); top + 1];
        for c in &self.base.critical_points {
            for (p, j) in fiber_order(&self.fibers[&c.label]) {
                let d = c.index + j;
                if d <= top {
                    out[d].push(FamilyGen {
                        x: c.label.clone(),
                        p,
                        i: c.index,
                        j,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FamilyGen {
    pub x: String,
    pub p: String,
    pub i: usize,
    pub j: usize,
}

impl FamilyGen {
    pub fn label(&self) -> String {
        gen_label(&self.x, &self.p)
    }
}

#[derive(Clone, Debug)]
pub struct FamilyComplex {
    pub filtered: FilteredComplex,
    pub gens: Vec<Vec<FamilyGen>>,
}

impl FamilyComplex {
    pub fn complex(&self) -> &GradedComplex {
        self.filtered.complex()
    }

    pub fn position(&self, x: &str, p: &str) -> Option<(usize, usize)> {
        self.gens
            .iter()
            .enumerate()
            .find_map(|(d, gs)| gs.iter().position(|g| g.x == x && g.p == p).map(|k| (d, k)))
    }
}

/// Assembles the total differential; fails with the offending pair when `δ² ≠ 0`.
pub fn assemble(d: &FamilyDescriptor) -> Result<FamilyComplex, FamilyError> {
    d.validate()?;
    let gens = d.generators();
    let index: HashMap<(String, String), (usize, usize)> = gens
        .iter()
        .enumerate()
        .flat_map(|(deg, gs)| {
            gs.iter()
                .enumerate()
                .map(move |(k, g)| ((g.x.clone(), g.p.clone()), (deg, k)))
        })
        .collect();
    let mut diffs: Vec<IntMatrix> = (0..gens.len())
        .map(|n| IntMatrix::zeros(if n == 0 { 0 } else { gens[n - 1].len() }, gens[n].len()))
        .collect();
    let base_index = d.base_index();
    // δ₀
    for (x, fiber) in &d.fibers {
        let Some(&i) = base_index.get(x) else {
            continue;
        };
        let sign = if i % 2 == 0 { 1 } else { -1 };
        for Flow { from, to, count } in &fiber.flows {
            let Some(&(deg, c)) = index.get(&(x.clone(), from.clone())) else {
                continue;
            };
            let (_, r) = index[&(x.clone(), to.clone())];
            diffs[deg][(r, c)] += BigInt::from(sign * count);
        }
    }
    // δ_k, k ≥ 1
    for b in &d.blocks {
        let src = fiber_order(&d.fibers[&b.from_x]);
        let dst = fiber_order(&d.fibers[&b.to_y]);
        for (c, (p, _)) in src.iter().enumerate() {
            let Some(&(deg, cc)) = index.get(&(b.from_x.clone(), p.clone())) else {
                continue;
            };
            for (r, (q, _)) in dst.iter().enumerate() {
                let v = &b.matrix[(r, c)];
                if v.is_zero() {
                    continue;
                }
                let (deg2, rr) = index[&(b.to_y.clone(), q.clone())];
                debug_assert_eq!(deg2 + 1, deg);
                diffs[deg][(rr, cc)] += v;
            }
        }
    }
    let labels: Vec<Vec<String>> = gens
        .iter()
        .map(|gs| gs.iter().map(FamilyGen::label).collect())
        .collect();
    let levels: Vec<Vec<usize>> = gens
        .iter()
        .map(|gs| gs.iter().map(|g| g.i).collect())
        .collect();
    let complex = GradedComplex::new(labels, diffs).map_err(|e| match e {
        ComplexError::NotAComplex {
            source_label,
            target_label,
            coefficient,
            ..
        } => FamilyError::NotAComplex {
            from: source_label,
            to: target_label,
            coefficient,
        },
        other => FamilyError::Invalid(other.to_string()),
    })?;
    let filtered =
        FilteredComplex::new(complex, levels).map_err(|e| FamilyError::Invalid(e.to_string()))?;
    Ok(FamilyComplex { filtered, gens })
}

/// Family homology together with the induced filtration on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyHomology {
    pub groups: Vec<FgAbGroup>,
    /// `G_i HF_{i+j}` keyed by `(i, j)`.
    pub graded: BTreeMap<(i64, i64), FgAbGroup>,
}

pub fn family_homology(c: &FamilyComplex) -> FamilyHomology {
    FamilyHomology {
        groups: c.complex().homology(),
        graded: homology_graded(&c.filtered),
    }
}

pub fn family_pages(c: &FamilyComplex) -> SpectralSequence {
    SpectralSequence::compute(&c.filtered)
}

/// Fiber Morse homology at a base point as explicit quotients, one per fiber degree.
fn fiber_homology(d: &FamilyDescriptor, x: &str) -> Result<Vec<Quotient>, FamilyError> {
    let c = morse_complex(&d.fibers[x])?;
    Ok((0..=d.fiber_dim)
        .map(|j| {
            if j < c.len() {
                c.homology_at(j)
            } else {
                empty_quotient()
            }
        })
        .collect())
}

fn empty_quotient() -> Quotient {
    Quotient::new(
        &crate::algebra::Subgroup::trivial(0),
        &crate::algebra::Subgroup::trivial(0),
    )
    .unwrap()
}

/// Submatrix of a block between fiber degrees `j` (source) and `j2` (target).
fn block_part(d: &FamilyDescriptor, b: &Block, j: usize, j2: usize) -> IntMatrix {
    let src = fiber_order(&d.fibers[&b.from_x]);
    let dst = fiber_order(&d.fibers[&b.to_y]);
    let cols: Vec<usize> = src
        .iter()
        .enumerate()
        .filter(|(_, (_, jj))| *jj == j)
        .map(|(k, _)| k)
        .collect();
    let rows: Vec<usize> = dst
        .iter()
        .enumerate()
        .filter(|(_, (_, jj))| *jj == j2)
        .map(|(k, _)| k)
        .collect();
    b.matrix.select(&rows, &cols)
}

/// The local system of fiber homologies read off from the descriptor: stalks are fiber Morse
/// homology groups and each δ₁ block contributes one transport (its induced map on homology).
/// The second component says whether every transport is an isomorphism.
pub fn local_system(d: &FamilyDescriptor) -> Result<(LocalSystem, bool), FamilyError> {
    d.validate()?;
    let mut quotients = BTreeMap::new();
    let mut stalks = BTreeMap::new();
    for c in &d.base.critical_points {
        let qs = fiber_homology(d, &c.label)?;
        stalks.insert(
            c.label.clone(),
            qs.iter()
                .map(|q| Stalk::from_orders(q.orders()))
                .collect::<Vec<_>>(),
        );
        quotients.insert(c.label.clone(), qs);
    }
    let mut lines = Vec::new();
    let mut invertible = true;
    for b in d.blocks.iter().filter(|b| b.k == 1) {
        let mut maps = Vec::new();
        for j in 0..=d.fiber_dim {
            let qa = &quotients[&b.from_x][j];
            let qb = &quotients[&b.to_y][j];
            let part = block_part(d, b, j, j);
            // the fiber complexes index points by position within degree j
            let m = if qa.ambient_rank() == 0 || qb.ambient_rank() == 0 {
                IntMatrix::zeros(qb.num_generators(), qa.num_generators())
            } else {
                qa.induced_matrix(&part, qb).map_err(|e| {
                    FamilyError::Invalid(format!("δ₁ block is not a chain map: {e}"))
                })?
            };
            let sa = Stalk::from_orders(qa.orders());
            let sb = Stalk::from_orders(qb.orders());
            let qa2 =
                Quotient::new(&crate::algebra::Subgroup::full(sa.gens), &sa.relations).unwrap();
            let qb2 =
                Quotient::new(&crate::algebra::Subgroup::full(sb.gens), &sb.relations).unwrap();
            if qa2.induced_is_iso(&m, &qb2) != Ok(true) {
                invertible = false;
            }
            maps.push(m);
        }
        lines.push(TransportLine {
            from: b.from_x.clone(),
            to: b.to_y.clone(),
            maps,
        });
    }
    let ls = LocalSystem::new_unchecked(d.base.clone(), stalks, lines)?;
    Ok((ls, invertible))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct E2Report {
    pub engine: BTreeMap<(i64, i64), FgAbGroup>,
    pub local: BTreeMap<(i64, i64), FgAbGroup>,
    pub locally_constant: bool,
    pub first_mismatch: Option<(i64, i64)>,
}

impl E2Report {
    pub fn agrees(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Compares `E²` from the spectral engine with `H_i(B; F_j)` of the local system.
pub fn e2_crosscheck(d: &FamilyDescriptor) -> Result<E2Report, FamilyError> {
    let c = assemble(d)?;
    let ss = family_pages(&c);
    let engine = ss.page(2).groups();
    let (ls, locally_constant) = local_system(d)?;
    let local = ls.homology();
    let keys: std::collections::BTreeSet<_> = engine.keys().chain(local.keys()).copied().collect();
    let first_mismatch = keys.into_iter().find(|k| engine.get(k) != local.get(k));
    Ok(E2Report {
        engine,
        local,
        locally_constant,
        first_mismatch,
    })
}

/// The family of `(−f, −𝔬)`: base index `i ↦ m − i`, fiber index `j ↦ n − j`, flows reversed
/// (fiber counts scaled by `(−1)^m`), and each block transposed and reversed. The assembled
/// complex is the transpose of the original one.
pub fn dualize(d: &FamilyDescriptor) -> Result<FamilyDescriptor, FamilyError> {
    d.validate()?;
    let m = d.dim_base;
    let n = d.fiber_dim;
    let dual_morse = |md: &MorseData, dim: usize, scale: i64, tag: &str| MorseData {
        critical_points: md
            .critical_points
            .iter()
            .map(|c| crate::morse::CriticalPoint {
                label: c.label.clone(),
                index: dim - c.index,
            })
            .collect(),
        flows: md
            .flows
            .iter()
            .map(|f| Flow {
                from: f.to.clone(),
                to: f.from.clone(),
                count: scale * f.count,
            })
            .collect(),
        orientation: format!("{}+{tag}", md.orientation),
    };
    let fiber_scale = if m.is_multiple_of(2) { 1 } else { -1 };
    let base = dual_morse(&d.base, m, 1, "dual");
    let fibers: BTreeMap<String, MorseData> = d
        .fibers
        .iter()
        .map(|(x, f)| (x.clone(), dual_morse(f, n, fiber_scale, "dual")))
        .collect();
    let mut blocks = Vec::new();
    for b in &d.blocks {
        let src = fiber_order(&d.fibers[&b.from_x]);
        let dst = fiber_order(&d.fibers[&b.to_y]);
        let nsrc = fiber_order(&fibers[&b.to_y]);
        let ndst = fiber_order(&fibers[&b.from_x]);
        let pos =
            |list: &[(String, usize)], l: &str| list.iter().position(|(q, _)| q == l).unwrap();
        let mut mat = IntMatrix::zeros(ndst.len(), nsrc.len());
        for (c, (p, _)) in src.iter().enumerate() {
            for (r, (q, _)) in dst.iter().enumerate() {
                let v = &b.matrix[(r, c)];
                if !v.is_zero() {
                    mat[(pos(&ndst, p), pos(&nsrc, q))] = v.clone();
                }
            }
        }
        blocks.push(Block {
            k: b.k,
            from_x: b.to_y.clone(),
            to_y: b.from_x.clone(),
            matrix: mat,
        });
    }
    Ok(FamilyDescriptor {
        base,
        dim_base: m,
        fiber_dim: n,
        fibers,
        blocks,
        oriented_fibers: d.oriented_fibers,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PoincareReport {
    /// The dual descriptor assembles to the transposed complex, generator by generator.
    pub chain_level: bool,
    /// `E_k^{i,j}` of the cohomological sequence equals `Ê^k_{m−i,n−j}` for every `k ≥ 2`.
    pub pages: bool,
    /// ℚ-dimensions of `E^k_{i,j}` and `Ê^k_{m−i,n−j}` agree for every `k ≥ 2`.
    pub rational: bool,
    pub first_mismatch: Option<String>,
}

impl PoincareReport {
    pub fn holds(&self) -> bool {
        self.chain_level && self.pages && self.rational
    }
}

/// Cohomological spectral sequence of a family complex, returned as the homological sequence
/// of the dual complex with level `m − i`; its `(m − i, n − j)` entry is `E_k^{i,j}`.
pub fn cohomological_pages(
    c: &FamilyComplex,
    dim_base: usize,
) -> (FilteredComplex, SpectralSequence) {
    let dual = c.complex().dual();
    let top = c.complex().len() - 1;
    let levels: Vec<Vec<usize>> = (0..dual.len())
        .map(|n| {
            c.filtered
                .levels(top - n)
                .iter()
                .map(|&l| dim_base - l)
                .collect()
        })
        .collect();
    let f = FilteredComplex::new(dual, levels)
        .expect("dual of a filtered complex is filtered the other way");
    let ss = SpectralSequence::compute(&f);
    (f, ss)
}

pub fn poincare_check(d: &FamilyDescriptor) -> Result<PoincareReport, FamilyError> {
    if !d.oriented_fibers {
        return Err(FamilyError::Unsupported(
            "Poincaré duality needs compatibly oriented fibers; this family's monodromy reverses the fiber orientation"
                .into(),
        ));
    }
    let c = assemble(d)?;
    let dd = dualize(d)?;
    let cd = assemble(&dd)?;
    let (m, n) = (d.dim_base as i64, d.fiber_dim as i64);
    let (cof, coss) = cohomological_pages(&c, d.dim_base);
    let mut first_mismatch = None;
    let chain_level = cof == cd.filtered;
    if !chain_level {
        first_mismatch =
            Some("dual descriptor does not assemble to the transposed complex".to_string());
    }
    let ssd = family_pages(&cd);
    let ss = family_pages(&c);
    let rounds = ss
        .pages()
        .len()
        .max(ssd.pages().len())
        .max(coss.pages().len())
        + 1;
    let mut pages = true;
    let mut rational = true;
    for k in 2..=rounds {
        if coss.page(k).groups() != ssd.page(k).groups() {
            pages = false;
            first_mismatch.get_or_insert(format!("page {k}: cohomological and dual pages differ"));
        }
        let a = rational_page_dims(&c.filtered, k);
        let b = rational_page_dims(&cd.filtered, k);
        let flipped: BTreeMap<(i64, i64), usize> =
            b.iter().map(|(&(i, j), &v)| ((m - i, n - j), v)).collect();
        if a != flipped {
            rational = false;
            first_mismatch.get_or_insert(format!(
                "page {k}: rational dimensions differ under (i,j) -> (m-i,n-j)"
            ));
        }
    }
    Ok(PoincareReport {
        chain_level,
        pages,
        rational,
        first_mismatch,
    })
}

/// Map between two families over the same base: blocks `Φ_k[x → y] : C_{i,j} → C'_{i−k, j+k}`
/// (fiber order as for [`Block`]).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationDescriptor {
    pub source: FamilyDescriptor,
    pub target: FamilyDescriptor,
    pub blocks: Vec<Block>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContinuationReport {
    pub chain_map: bool,
    pub homology_iso: bool,
    /// Pages `r ≥ 2` on which the induced map is an isomorphism.
    pub page_iso: Vec<(usize, bool)>,
    pub detail: Option<String>,
}

impl ContinuationReport {
    pub fn equivalence(&self) -> bool {
        self.chain_map && self.homology_iso && self.page_iso.iter().all(|&(_, ok)| ok)
    }
}

pub fn continuation_map(
    cd: &ContinuationDescriptor,
    s: &FamilyComplex,
    t: &FamilyComplex,
) -> Result<ChainMap, FamilyError> {
    let src_index = cd.source.base_index();
    let tgt_index = cd.target.base_index();
    let mut maps: Vec<IntMatrix> = (0..s.gens.len())
        .map(|n| IntMatrix::zeros(t.gens.get(n).map_or(0, Vec::len), s.gens[n].len()))
        .collect();
    for (bi, b) in cd.blocks.iter().enumerate() {
        let bad = |reason: &str| FamilyError::BadBlock {
            index: bi,
            from: b.from_x.clone(),
            to: b.to_y.clone(),
            k: b.k,
            reason: reason.to_string(),
        };
        let i = *src_index
            .get(&b.from_x)
            .ok_or_else(|| bad("unknown source"))?;
        let i2 = *tgt_index
            .get(&b.to_y)
            .ok_or_else(|| bad("unknown target"))?;
        if i < b.k || i2 != i - b.k {
            return Err(bad("base indices do not differ by k"));
        }
        let src = fiber_order(&cd.source.fibers[&b.from_x]);
        let dst = fiber_order(&cd.target.fibers[&b.to_y]);
        if b.matrix.shape() != (dst.len(), src.len()) {
            return Err(bad("matrix shape"));
        }
        for (c, (p, j)) in src.iter().enumerate() {
            let Some((deg, cc)) = s.position(&b.from_x, p) else {
                continue;
            };
            for (r, (q, j2)) in dst.iter().enumerate() {
                let v = &b.matrix[(r, c)];
                if v.is_zero() {
                    continue;
                }
                if *j2 != j + b.k {
                    return Err(bad("entry outside bidegree"));
                }
                let (deg2, rr) = t
                    .position(&b.to_y, q)
                    .ok_or_else(|| bad("target generator missing"))?;
                debug_assert_eq!(deg, deg2);
                maps[deg][(rr, cc)] += v;
            }
        }
    }
    Ok(GradedMap::new(0, maps))
}

/// Verifies that the continuation is a filtered chain map inducing isomorphisms on homology
/// and on every page `r ≥ 2`.
pub fn verify_family_continuation(
    cd: &ContinuationDescriptor,
) -> Result<ContinuationReport, FamilyError> {
    let s = assemble(&cd.source)?;
    let t = assemble(&cd.target)?;
    let phi = continuation_map(cd, &s, &t)?;
    if let Err(e) = verify_filtered_chain_map(&phi, &s.filtered, &t.filtered) {
        return Ok(ContinuationReport {
            chain_map: false,
            homology_iso: false,
            page_iso: vec![],
            detail: Some(e.to_string()),
        });
    }
    let homology_iso = induces_homology_iso(&phi, s.complex(), t.complex());
    let (ss, st) = (family_pages(&s), family_pages(&t));
    let last = ss.pages().len().max(st.pages().len()).max(2);
    let page_iso = (2..=last)
        .map(|r| {
            (
                r,
                is_page_iso(&phi, r, (&s.filtered, &ss), (&t.filtered, &st)),
            )
        })
        .collect();
    Ok(ContinuationReport {
        chain_map: true,
        homology_iso,
        page_iso,
        detail: None,
    })
}

/// Identity continuation from a family to itself.
pub fn identity_continuation(d: &FamilyDescriptor) -> ContinuationDescriptor {
    let blocks = d
        .base
        .critical_points
        .iter()
        .map(|c| {
            let n = fiber_order(&d.fibers[&c.label]).len();
            Block {
                k: 0,
                from_x: c.label.clone(),
                to_y: c.label.clone(),
                matrix: IntMatrix::identity(n),
            }
        })
        .collect();
    ContinuationDescriptor {
        source: d.clone(),
        target: d.clone(),
        blocks,
    }
}

/// Composite of two continuations `a: D → D'` and `b: D' → D''` as a chain map.
pub fn compose_continuations(
    a: &ContinuationDescriptor,
    b: &ContinuationDescriptor,
) -> Result<ChainMap, FamilyError> {
    let s = assemble(&a.source)?;
    let m = assemble(&a.target)?;
    let t = assemble(&b.target)?;
    let pa = continuation_map(a, &s, &m)?;
    let pb = continuation_map(b, &m, &t)?;
    Ok(pb.compose(&pa, s.complex(), m.complex(), t.complex()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SphereReport {
    pub k: usize,
    /// `(δ_k)_* : H_j(F_north) → H_{j+k−1}(F_south)` per `j`.
    pub induced: Vec<IntMatrix>,
    /// `d_k` on `E^k_{k,j}` per `j` (in page presentations).
    pub page_differentials: Vec<Option<IntMatrix>>,
    pub agree: bool,
}

/// For a base with exactly two critical points of indices `0` and `k`, checks that `d_k` on
/// the page equals the map induced on fiber homology by the `δ_k` block.
pub fn sphere_higher_differential(d: &FamilyDescriptor) -> Result<SphereReport, FamilyError> {
    let pts = &d.base.critical_points;
    if pts.len() != 2 {
        return Err(FamilyError::Unsupported(
            "base must have exactly two critical points".into(),
        ));
    }
    let (south, north) = if pts[0].index == 0 {
        (&pts[0], &pts[1])
    } else {
        (&pts[1], &pts[0])
    };
    let k = north.index;
    if south.index != 0 || k == 0 {
        return Err(FamilyError::Unsupported(
            "base critical points must have indices 0 and k > 0".into(),
        ));
    }
    let c = assemble(d)?;
    let ss = family_pages(&c);
    let hn = fiber_homology(d, &north.label)?;
    let hs = fiber_homology(d, &south.label)?;
    let mut induced = Vec::new();
    let mut page_differentials = Vec::new();
    let mut agree = true;
    for j in 0..=d.fiber_dim {
        let jt = j + k - 1;
        let tgt = if jt <= d.fiber_dim { &hs[jt] } else { &hs[0] };
        let mut total = IntMatrix::zeros(
            if jt <= d.fiber_dim {
                tgt.ambient_rank()
            } else {
                0
            },
            hn[j].ambient_rank(),
        );
        if jt <= d.fiber_dim {
            for b in d
                .blocks
                .iter()
                .filter(|b| b.k == k && b.from_x == north.label && b.to_y == south.label)
            {
                total = total.add(&block_part(d, b, j, jt));
            }
        }
        let ind = if jt <= d.fiber_dim && hn[j].ambient_rank() > 0 && tgt.ambient_rank() > 0 {
            hn[j]
                .induced_matrix(&total, tgt)
                .map_err(|e| FamilyError::Invalid(e.to_string()))?
        } else {
            IntMatrix::zeros(
                if jt <= d.fiber_dim {
                    tgt.num_generators()
                } else {
                    0
                },
                hn[j].num_generators(),
            )
        };
        // chain-level comparison on each page generator of E^k_{k,j}
        let page = ss.page(k);
        let entry = page.entry(k as i64, j as i64);
        page_differentials.push(page.differential(k as i64, j as i64).cloned());
        if let Some(e) = entry {
            let deg = e.degree;
            let gens = &c.gens[deg];
            let dmat = c.complex().d(deg);
            for lift in e.presentation.lifts() {
                // north component, as a fiber chain in degree j
                let mut zn = vec![BigInt::zero(); hn[j].ambient_rank()];
                let mut slot = 0;
                for (g, v) in gens.iter().zip(lift) {
                    if g.x == north.label {
                        debug_assert_eq!(g.j, j);
                        zn[slot] = v.clone();
                        slot += 1;
                    }
                }
                let boundary = dmat.mul_vec(lift);
                if jt > d.fiber_dim || deg == 0 {
                    continue;
                }
                let mut zs = vec![BigInt::zero(); tgt.ambient_rank()];
                let mut slot = 0;
                for (g, v) in c.gens[deg - 1].iter().zip(&boundary) {
                    if g.x == south.label {
                        zs[slot] = v.clone();
                        slot += 1;
                    } else if !v.is_zero() {
                        agree = false;
                    }
                }
                let lhs = tgt
                    .project(&zs)
                    .map_err(|e| FamilyError::Invalid(e.to_string()))?;
                let cn = hn[j]
                    .project(&zn)
                    .map_err(|e| FamilyError::Invalid(e.to_string()))?;
                let mut rhs = ind.mul_vec(&cn);
                for (x, o) in rhs.iter_mut().zip(tgt.orders()) {
                    if !o.is_zero() {
                        *x = num_integer::Integer::mod_floor(&*x, o);
                    }
                }
                if lhs != rhs {
                    agree = false;
                }
            }
        }
        induced.push(ind);
    }
    Ok(SphereReport {
        k,
        induced,
        page_differentials,
        agree,
    })
}

/// Product family `B × X`: the same fiber data everywhere and one identity-times-count δ₁
/// block per base flow record.
pub fn product(
    base: &MorseData,
    dim_base: usize,
    fiber: &MorseData,
    fiber_dim: usize,
) -> FamilyDescriptor {
    let fibers = base
        .critical_points
        .iter()
        .map(|c| (c.label.clone(), fiber.clone()))
        .collect();
    let n = fiber.critical_points.len();
    let blocks = base
        .flows
        .iter()
        .map(|f| Block {
            k: 1,
            from_x: f.from.clone(),
            to_y: f.to.clone(),
            matrix: IntMatrix::identity(n).scale(&BigInt::from(f.count)),
        })
        .collect();
    FamilyDescriptor {
        base: base.clone(),
        dim_base,
        fiber_dim,
        fibers,
        blocks,
        oriented_fibers: true,
    }
}

/// Q-dimension form of the degeneration statement: every page from `E²` on has the ℚ-ranks
/// of `E²`.
pub fn collapses_rationally(c: &FamilyComplex) -> bool {
    let ss = family_pages(c);
    let e2 = rational_page_dims(&c.filtered, 2);
    (3..=ss.pages().len().max(3)).all(|r| rational_page_dims(&c.filtered, r) == e2)
}
