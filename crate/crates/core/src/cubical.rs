//! Family complexes over a finite cubulation of the base: generators `(σ, g, p)` with `σ` a
//! cube, `g` a metric token and `p` a critical point of the fiber function over the center
//! of `σ`; the filtration level is `dim σ`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::algebra::{image, preimage, FgAbGroup, IntMatrix, Quotient, Subgroup};
use crate::complexes::{
    verify_filtered_chain_map, ChainMap, FilteredComplex, GradedComplex, GradedMap,
};
use crate::family::{assemble, fiber_order, Block, FamilyDescriptor, FamilyError};
use crate::morse::{CriticalPoint, Flow, MorseData};
use crate::spectral::{induced_morphism, SpectralMorphism, SpectralSequence};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Face {
    pub id: String,
    pub sign: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cube {
    pub id: String,
    pub dim: usize,
    pub faces: Vec<Face>,
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default = "default_metric")]
    pub metric: String,
}

fn default_metric() -> String {
    "g".to_string()
}

/// Cubes with signed codimension-one faces, fiber Morse data over every face center, and the
/// pieces `δ_k[σ → τ]` for `k ≥ 1` (`τ` a face of `σ` of codimension `k`). Block matrices use
/// the fiber order of [`fiber_order`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cubulation {
    pub cubes: Vec<Cube>,
    pub fiber_data: BTreeMap<String, MorseData>,
    pub blocks: Vec<Block>,
    pub fiber_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CubicalError {
    #[error("cube {0:?}: {1}")]
    Cube(String, String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("{0}")]
    Incompatible(String),
}

pub fn cube_label(sigma: &str, metric: &str, p: &str) -> String {
    format!("({sigma},{metric},{p})")
}

impl Cubulation {
    pub fn cube(&self, id: &str) -> Option<&Cube> {
        self.cubes.iter().find(|c| c.id == id)
    }

    pub fn validate(&self) -> Result<(), CubicalError> {
        let mut seen = BTreeSet::new();
        for c in &self.cubes {
            if !seen.insert(c.id.as_str()) {
                return Err(CubicalError::Cube(c.id.clone(), "duplicate id".into()));
            }
        }
        for c in &self.cubes {
            if c.faces.len() != 2 * c.dim {
                return Err(CubicalError::Cube(
                    c.id.clone(),
                    format!("{} faces for a {}-cube", c.faces.len(), c.dim),
                ));
            }
            for f in &c.faces {
                let t = self.cube(&f.id).ok_or_else(|| {
                    CubicalError::Cube(c.id.clone(), format!("face {:?} is not a member", f.id))
                })?;
                if t.dim + 1 != c.dim {
                    return Err(CubicalError::Cube(
                        c.id.clone(),
                        format!("face {:?} has the wrong dimension", f.id),
                    ));
                }
                if f.sign != 1 && f.sign != -1 {
                    return Err(CubicalError::Cube(
                        c.id.clone(),
                        "face signs must be ±1".into(),
                    ));
                }
            }
            if !c.degenerate && !self.fiber_data.contains_key(&c.id) {
                return Err(CubicalError::Cube(
                    c.id.clone(),
                    "no fiber data over the center".into(),
                ));
            }
        }
        // faces of faces cancel
        for c in &self.cubes {
            let mut acc: BTreeMap<&str, i64> = BTreeMap::new();
            for f in &c.faces {
                for ff in &self.cube(&f.id).unwrap().faces {
                    *acc.entry(ff.id.as_str()).or_default() += f.sign * ff.sign;
                }
            }
            if let Some((id, _)) = acc.iter().find(|(_, &v)| v != 0) {
                return Err(CubicalError::Cube(
                    c.id.clone(),
                    format!("faces of faces do not cancel at {id:?}"),
                ));
            }
        }
        Ok(())
    }

    /// The same data as a family over the cellular base: cubes become critical points and
    /// faces become flow records; degenerate cubes are dropped.
    pub fn to_descriptor(&self) -> Result<FamilyDescriptor, CubicalError> {
        self.validate()?;
        let live: Vec<&Cube> = self.cubes.iter().filter(|c| !c.degenerate).collect();
        let live_ids: BTreeSet<&str> = live.iter().map(|c| c.id.as_str()).collect();
        let base = MorseData {
            critical_points: live
                .iter()
                .map(|c| CriticalPoint {
                    label: c.id.clone(),
                    index: c.dim,
                })
                .collect(),
            flows: live
                .iter()
                .flat_map(|c| {
                    c.faces
                        .iter()
                        .filter(|f| live_ids.contains(f.id.as_str()))
                        .map(|f| Flow {
                            from: c.id.clone(),
                            to: f.id.clone(),
                            count: f.sign,
                        })
                })
                .collect(),
            orientation: "cube-faces".into(),
        };
        let dim_base = live.iter().map(|c| c.dim).max().unwrap_or(0);
        let fibers = live
            .iter()
            .map(|c| (c.id.clone(), self.fiber_data[&c.id].clone()))
            .collect();
        let blocks = self
            .blocks
            .iter()
            .filter(|b| live_ids.contains(b.from_x.as_str()) && live_ids.contains(b.to_y.as_str()))
            .cloned()
            .collect();
        Ok(FamilyDescriptor {
            base,
            dim_base,
            fiber_dim: self.fiber_dim,
            fibers,
            blocks,
            oriented_fibers: true,
        })
    }

    /// Subcubulation on the given cubes (which must be closed under faces).
    pub fn restrict(&self, ids: &BTreeSet<String>) -> Result<Cubulation, CubicalError> {
        for c in self.cubes.iter().filter(|c| ids.contains(&c.id)) {
            if let Some(f) = c.faces.iter().find(|f| !ids.contains(&f.id)) {
                return Err(CubicalError::Incompatible(format!(
                    "{:?} is a face of {:?} but not in the subset",
                    f.id, c.id
                )));
            }
        }
        Ok(Cubulation {
            cubes: self
                .cubes
                .iter()
                .filter(|c| ids.contains(&c.id))
                .cloned()
                .collect(),
            fiber_data: self
                .fiber_data
                .iter()
                .filter(|(k, _)| ids.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            blocks: self
                .blocks
                .iter()
                .filter(|b| ids.contains(&b.from_x) && ids.contains(&b.to_y))
                .cloned()
                .collect(),
            fiber_dim: self.fiber_dim,
        })
    }
}

#[derive(Clone, Debug)]
pub struct CubicalComplex {
    pub filtered: FilteredComplex,
    /// `(σ, p)` per degree.
    pub gens: Vec<Vec<(String, String)>>,
}

impl CubicalComplex {
    pub fn complex(&self) -> &GradedComplex {
        self.filtered.complex()
    }

    fn position(&self) -> HashMap<(String, String), (usize, usize)> {
        self.gens
            .iter()
            .enumerate()
            .flat_map(|(d, gs)| gs.iter().enumerate().map(move |(k, g)| (g.clone(), (d, k))))
            .collect()
    }
}

pub fn assemble_cubical(k: &Cubulation) -> Result<CubicalComplex, CubicalError> {
    let d = k.to_descriptor()?;
    let fc = assemble(&d)?;
    let metric: HashMap<&str, &str> = k
        .cubes
        .iter()
        .map(|c| (c.id.as_str(), c.metric.as_str()))
        .collect();
    let gens: Vec<Vec<(String, String)>> = fc
        .gens
        .iter()
        .map(|gs| gs.iter().map(|g| (g.x.clone(), g.p.clone())).collect())
        .collect();
    let labels: Vec<Vec<String>> = gens
        .iter()
        .map(|gs| {
            gs.iter()
                .map(|(s, p)| cube_label(s, metric[s.as_str()], p))
                .collect()
        })
        .collect();
    let c = fc.complex();
    let diffs = (0..c.len()).map(|n| c.d(n)).collect();
    let complex = GradedComplex::new(labels, diffs).expect("relabelling keeps a complex");
    let levels = (0..c.len())
        .map(|n| fc.filtered.levels(n).to_vec())
        .collect();
    let filtered = FilteredComplex::new(complex, levels).expect("relabelling keeps the filtration");
    Ok(CubicalComplex { filtered, gens })
}

/// First disagreement between two spectral sequences on pages `r ≥ 2`: page groups or ranks
/// of `d_r`.
pub fn compare_pages(a: &SpectralSequence, b: &SpectralSequence) -> Result<(), (usize, i64, i64)> {
    let last = a.pages().len().max(b.pages().len()) + 1;
    for r in 2..=last {
        let (pa, pb) = (a.page(r), b.page(r));
        let (ga, gb) = (pa.groups(), pb.groups());
        let keys: BTreeSet<_> = ga.keys().chain(gb.keys()).copied().collect();
        if let Some(&(i, j)) = keys.iter().find(|k| ga.get(k) != gb.get(k)) {
            return Err((r, i, j));
        }
        let nonzero = |m: BTreeMap<(i64, i64), usize>| {
            m.into_iter()
                .filter(|(_, v)| *v > 0)
                .collect::<BTreeMap<_, _>>()
        };
        let (ra, rb) = (
            nonzero(pa.differential_ranks()),
            nonzero(pb.differential_ranks()),
        );
        let keys: BTreeSet<_> = ra.keys().chain(rb.keys()).copied().collect();
        if let Some(&(i, j)) = keys.iter().find(|k| ra.get(k) != rb.get(k)) {
            return Err((r, i, j));
        }
    }
    Ok(())
}

pub fn compare_with_family(
    k: &CubicalComplex,
    d: &FamilyDescriptor,
) -> Result<(), (usize, i64, i64)> {
    let c = assemble(d).map_err(|_| (0, 0, 0))?;
    compare_pages(
        &SpectralSequence::compute(&k.filtered),
        &SpectralSequence::compute(&c.filtered),
    )
}

/// A cellular map of cubulations: each cube of the source goes to a cube of the same
/// dimension with a sign, or to `None` when it collapses to a degenerate cube.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeMap {
    pub cubes: BTreeMap<String, Option<(String, i64)>>,
}

#[derive(Clone, Debug)]
pub struct Pushforward {
    pub map: ChainMap,
    pub pages: SpectralMorphism,
}

/// `(σ, g, p) ↦ ±(φ∘σ, g, p)`, checked to be a filtered chain map.
pub fn pushforward(
    phi: &CubeMap,
    source: &Cubulation,
    target: &Cubulation,
) -> Result<(Pushforward, CubicalComplex, CubicalComplex), CubicalError> {
    let s = assemble_cubical(source)?;
    let t = assemble_cubical(target)?;
    let tpos = t.position();
    let mut maps: Vec<IntMatrix> = (0..s.gens.len())
        .map(|n| IntMatrix::zeros(t.gens.get(n).map_or(0, Vec::len), s.gens[n].len()))
        .collect();
    for (n, gs) in s.gens.iter().enumerate() {
        for (c, (sigma, p)) in gs.iter().enumerate() {
            let image = phi.cubes.get(sigma).ok_or_else(|| {
                CubicalError::Incompatible(format!("cube {sigma:?} has no image"))
            })?;
            let Some((tau, sign)) = image else { continue };
            if target.cube(tau).map(|c| c.degenerate).unwrap_or(true) {
                if target.cube(tau).is_none() {
                    return Err(CubicalError::Incompatible(format!(
                        "image {tau:?} of {sigma:?} is not a cube"
                    )));
                }
                continue;
            }
            let src_fiber = fiber_order(&source.fiber_data[sigma]);
            let tgt_fiber = fiber_order(&target.fiber_data[tau]);
            if src_fiber != tgt_fiber {
                return Err(CubicalError::Incompatible(format!(
                    "fiber data over {sigma:?} is not pulled back from {tau:?}"
                )));
            }
            let &(n2, r) = tpos.get(&(tau.clone(), p.clone())).ok_or_else(|| {
                CubicalError::Incompatible(format!("({tau},{p}) missing in the target"))
            })?;
            if n2 != n {
                return Err(CubicalError::Incompatible(format!(
                    "{sigma:?} and {tau:?} differ in dimension"
                )));
            }
            maps[n][(r, c)] += BigInt::from(*sign);
        }
    }
    let map = GradedMap::new(0, maps);
    verify_filtered_chain_map(&map, &s.filtered, &t.filtered)
        .map_err(|e| CubicalError::Incompatible(format!("not a filtered chain map: {e}")))?;
    let (ss, st) = (
        SpectralSequence::compute(&s.filtered),
        SpectralSequence::compute(&t.filtered),
    );
    let pages = induced_morphism(&map, (&s.filtered, &ss), (&t.filtered, &st))
        .map_err(|e| CubicalError::Incompatible(e.to_string()))?;
    Ok((Pushforward { map, pages }, s, t))
}

/// One node of the Mayer-Vietoris sequence with the verdict on exactness there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MvNode {
    pub name: String,
    pub group: FgAbGroup,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MayerVietoris {
    pub nodes: Vec<MvNode>,
}

impl MayerVietoris {
    pub fn exact(&self) -> bool {
        self.nodes.iter().all(|n| n.exact)
    }
}

/// Inclusion of a subcomplex spanned by a subset of the generators, matched by `(σ, p)`.
fn inclusion(sub: &CubicalComplex, whole: &CubicalComplex) -> Vec<IntMatrix> {
    let pos = whole.position();
    sub.gens
        .iter()
        .enumerate()
        .map(|(n, gs)| {
            let mut m = IntMatrix::zeros(whole.gens[n].len(), gs.len());
            for (c, g) in gs.iter().enumerate() {
                m[(pos[g].1, c)] = BigInt::from(1);
            }
            m
        })
        .collect()
}

fn homology_quotients(c: &CubicalComplex) -> Vec<Quotient> {
    (0..c.gens.len())
        .map(|n| c.complex().homology_at(n))
        .collect()
}

/// Exactness of `A → B → C` at `B`, all maps in generator coordinates of the quotients.
fn exact_at(f: &IntMatrix, b: &Quotient, g: &IntMatrix, c: &Quotient) -> bool {
    let rel_b = Subgroup::from_generators(b.num_generators(), diag_relations(b));
    let rel_c = Subgroup::from_generators(c.num_generators(), diag_relations(c));
    let ker = preimage(g, &rel_c).expect("shapes agree");
    let im = image(f).sum(&rel_b).expect("shapes agree");
    ker == im
}

fn diag_relations(q: &Quotient) -> Vec<Vec<BigInt>> {
    let n = q.num_generators();
    q.orders()
        .iter()
        .enumerate()
        .filter(|(_, o)| !num_traits::Zero::is_zero(*o))
        .map(|(k, o)| {
            let mut v = vec![BigInt::from(0); n];
            v[k] = o.clone();
            v
        })
        .collect()
}

fn induced(q_src: &Quotient, f: &IntMatrix, q_dst: &Quotient) -> IntMatrix {
    if q_src.ambient_rank() == 0 || q_dst.ambient_rank() == 0 {
        return IntMatrix::zeros(q_dst.num_generators(), q_src.num_generators());
    }
    q_src
        .induced_matrix(f, q_dst)
        .expect("chain maps induce maps on homology")
}

fn stack_quotients(a: &Quotient, b: &Quotient) -> Quotient {
    let n = a.ambient_rank() + b.ambient_rank();
    let pad = |q: &Quotient, off: usize| -> Vec<Vec<BigInt>> {
        q.numerator()
            .generators()
            .iter()
            .map(|g| {
                let mut v = vec![BigInt::from(0); n];
                v[off..off + g.len()].clone_from_slice(g);
                v
            })
            .collect()
    };
    let padr = |q: &Quotient, off: usize| -> Vec<Vec<BigInt>> {
        q.relations()
            .generators()
            .iter()
            .map(|g| {
                let mut v = vec![BigInt::from(0); n];
                v[off..off + g.len()].clone_from_slice(g);
                v
            })
            .collect()
    };
    let num = Subgroup::from_generators(n, pad(a, 0).into_iter().chain(pad(b, a.ambient_rank())));
    let rel = Subgroup::from_generators(n, padr(a, 0).into_iter().chain(padr(b, a.ambient_rank())));
    Quotient::new(&num, &rel).expect("direct sum of quotients")
}

/// Mayer-Vietoris for `K = U ∪ V`:
/// `… → HF_n(U∩V) → HF_n(U) ⊕ HF_n(V) → HF_n(K) → HF_{n−1}(U∩V) → …`, with maps
/// `(i_U, −i_V)`, `j_U + j_V` and the connecting map, checked for exactness at every node.
pub fn mayer_vietoris(
    k: &Cubulation,
    u: &BTreeSet<String>,
    v: &BTreeSet<String>,
) -> Result<MayerVietoris, CubicalError> {
    let all: BTreeSet<String> = k.cubes.iter().map(|c| c.id.clone()).collect();
    let union: BTreeSet<String> = u.union(v).cloned().collect();
    if union != all {
        return Err(CubicalError::Incompatible(
            "U and V do not cover the cubulation".into(),
        ));
    }
    let w: BTreeSet<String> = u.intersection(v).cloned().collect();
    let ck = assemble_cubical(k)?;
    let cu = assemble_cubical(&k.restrict(u)?)?;
    let cv = assemble_cubical(&k.restrict(v)?)?;
    let cw = assemble_cubical(&k.restrict(&w)?)?;
    let top = ck.gens.len();
    let pad = |c: &CubicalComplex| -> CubicalComplex {
        let mut c = c.clone();
        while c.gens.len() < top {
            c.gens.push(vec![]);
        }
        c
    };
    let (cu, cv, cw) = (pad(&cu), pad(&cv), pad(&cw));
    let quot = |c: &CubicalComplex| -> Vec<Quotient> {
        let mut q = homology_quotients(c);
        while q.len() < top {
            q.push(Quotient::new(&Subgroup::trivial(0), &Subgroup::trivial(0)).unwrap());
        }
        q
    };
    let (hk, hu, hv, hw) = (quot(&ck), quot(&cu), quot(&cv), quot(&cw));
    let dim = |c: &CubicalComplex, n: usize| c.gens.get(n).map_or(0, Vec::len);
    let inc = |a: &CubicalComplex, b: &CubicalComplex, n: usize| -> IntMatrix {
        inclusion(a, b)
            .get(n)
            .cloned()
            .unwrap_or_else(|| IntMatrix::zeros(dim(b, n), dim(a, n)))
    };
    let u_pos: BTreeSet<(String, String)> = cu.gens.iter().flatten().cloned().collect();
    // sequence of (name, quotient, map to next node) from the top down
    let mut names = Vec::new();
    let mut groups: Vec<Quotient> = Vec::new();
    let mut maps: Vec<IntMatrix> = Vec::new();
    for n in (0..top).rev() {
        let huv = stack_quotients(&hu[n], &hv[n]);
        // H(U∩V) → H(U) ⊕ H(V)
        let iu = inc(&cw, &cu, n);
        let iv = inc(&cw, &cv, n).neg();
        let mut stacked = IntMatrix::zeros(iu.rows() + iv.rows(), iu.cols());
        stacked.add_block(0, 0, &iu);
        stacked.add_block(iu.rows(), 0, &iv);
        let a = induced(&hw[n], &stacked, &huv);
        // H(U) ⊕ H(V) → H(K)
        let ju = inc(&cu, &ck, n);
        let jv = inc(&cv, &ck, n);
        let b = induced(&huv, &ju.hstack(&jv), &hk[n]);
        // connecting map H_n(K) → H_{n−1}(U∩V)
        let c = if n == 0 {
            IntMatrix::zeros(0, hk[n].num_generators())
        } else {
            let dk = ck.complex().d(n);
            let wpos = cw.position();
            let cols: Vec<Vec<BigInt>> = hk[n]
                .lifts()
                .iter()
                .map(|z| {
                    let a_part: Vec<BigInt> = ck.gens[n]
                        .iter()
                        .zip(z)
                        .map(|(g, x)| {
                            if u_pos.contains(g) {
                                x.clone()
                            } else {
                                BigInt::from(0)
                            }
                        })
                        .collect();
                    let bd = dk.mul_vec(&a_part);
                    let mut out = vec![BigInt::from(0); dim(&cw, n - 1)];
                    for (g, x) in ck.gens[n - 1].iter().zip(&bd) {
                        if let Some(&(_, k)) = wpos.get(g) {
                            out[k] = x.clone();
                        }
                    }
                    if hw[n - 1].ambient_rank() == 0 {
                        vec![]
                    } else {
                        hw[n - 1]
                            .project(&out)
                            .expect("boundary of the U-part is a cycle in U∩V")
                    }
                })
                .collect();
            IntMatrix::from_columns(hw[n - 1].num_generators(), &cols)
        };
        names.push(format!("HF_{n}(U∩V)"));
        groups.push(hw[n].clone());
        maps.push(a);
        names.push(format!("HF_{n}(U)+HF_{n}(V)"));
        groups.push(huv);
        maps.push(b);
        names.push(format!("HF_{n}(K)"));
        groups.push(hk[n].clone());
        maps.push(c);
    }
    let trivial = Quotient::new(&Subgroup::trivial(0), &Subgroup::trivial(0)).unwrap();
    let mut nodes = Vec::new();
    for idx in 0..groups.len() {
        let incoming = if idx == 0 {
            IntMatrix::zeros(groups[0].num_generators(), 0)
        } else {
            maps[idx - 1].clone()
        };
        let (next, out) = if idx + 1 < groups.len() {
            (&groups[idx + 1], maps[idx].clone())
        } else {
            (&trivial, IntMatrix::zeros(0, groups[idx].num_generators()))
        };
        let exact = exact_at(&incoming, &groups[idx], &out, next);
        nodes.push(MvNode {
            name: names[idx].clone(),
            group: groups[idx].group().clone(),
            exact,
        });
    }
    Ok(MayerVietoris { nodes })
}

/// Circle cubulated by vertices `v0`, `v1` and edges `e0: v0 → v1`, `e1: v1 → v0`.
pub fn circle_cubes() -> Vec<Cube> {
    let cube = |id: &str, dim, faces: &[(&str, i64)]| Cube {
        id: id.to_string(),
        dim,
        faces: faces
            .iter()
            .map(|&(f, s)| Face {
                id: f.to_string(),
                sign: s,
            })
            .collect(),
        degenerate: false,
        metric: default_metric(),
    };
    vec![
        cube("v0", 0, &[]),
        cube("v1", 0, &[]),
        cube("e0", 1, &[("v1", 1), ("v0", -1)]),
        cube("e1", 1, &[("v0", 1), ("v1", -1)]),
    ]
}

/// Circle fibers over the two-edge circle. The edge `e1` crosses the gluing; `flip` is the
/// fiber transport from its center to `v1` (identity for the trivial bundle).
pub fn circle_family(fiber: &MorseData, fiber_dim: usize, flip: &IntMatrix) -> Cubulation {
    let n = fiber_order(fiber).len();
    let id = IntMatrix::identity(n);
    let block = |from: &str, to: &str, m: IntMatrix| Block {
        k: 1,
        from_x: from.into(),
        to_y: to.into(),
        matrix: m,
    };
    Cubulation {
        cubes: circle_cubes(),
        fiber_data: ["v0", "v1", "e0", "e1"]
            .iter()
            .map(|c| (c.to_string(), fiber.clone()))
            .collect(),
        blocks: vec![
            block("e0", "v1", id.clone()),
            block("e0", "v0", id.neg()),
            block("e1", "v0", id.clone()),
            block("e1", "v1", flip.neg()),
        ],
        fiber_dim,
    }
}

pub fn klein_cubical() -> Cubulation {
    circle_family(
        &crate::library::circle_fiber(),
        1,
        &IntMatrix::from_rows(&[[1, 0], [0, -1]]),
    )
}

pub fn torus_cubical() -> Cubulation {
    circle_family(&crate::library::circle_fiber(), 1, &IntMatrix::identity(2))
}

/// The circle cubulated by `w0..w3` and `f0..f3` with the data pulled back from `K` along
/// the double cover `w_k ↦ v_{k mod 2}`, `f_k ↦ e_{k mod 2}`, and that cover as a cube map.
pub fn double_cover(k: &Cubulation) -> (Cubulation, CubeMap) {
    let mut cubes = Vec::new();
    let mut map = BTreeMap::new();
    let mut fiber_data = BTreeMap::new();
    let mut blocks = Vec::new();
    for i in 0..4 {
        let (w, f) = (format!("w{i}"), format!("f{i}"));
        let next = format!("w{}", (i + 1) % 4);
        let (v, e) = (format!("v{}", i % 2), format!("e{}", i % 2));
        cubes.push(Cube {
            id: w.clone(),
            dim: 0,
            faces: vec![],
            degenerate: false,
            metric: default_metric(),
        });
        cubes.push(Cube {
            id: f.clone(),
            dim: 1,
            faces: vec![
                Face {
                    id: next.clone(),
                    sign: 1,
                },
                Face {
                    id: w.clone(),
                    sign: -1,
                },
            ],
            degenerate: false,
            metric: default_metric(),
        });
        fiber_data.insert(w.clone(), k.fiber_data[&v].clone());
        fiber_data.insert(f.clone(), k.fiber_data[&e].clone());
        map.insert(w.clone(), Some((v.clone(), 1)));
        map.insert(f.clone(), Some((e.clone(), 1)));
        let ec = k.cube(&e).unwrap();
        let (head, tail) = (&ec.faces[0].id, &ec.faces[1].id);
        for b in k.blocks.iter().filter(|b| b.from_x == e) {
            let to = if &b.to_y == head {
                next.clone()
            } else if &b.to_y == tail {
                w.clone()
            } else {
                continue;
            };
            blocks.push(Block {
                k: 1,
                from_x: f.clone(),
                to_y: to,
                matrix: b.matrix.clone(),
            });
        }
    }
    (
        Cubulation {
            cubes,
            fiber_data,
            blocks,
            fiber_dim: k.fiber_dim,
        },
        CubeMap { cubes: map },
    )
}
