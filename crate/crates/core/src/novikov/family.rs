//! Family Novikov complexes over a circle base with a reference class `χ ∈ Γ` on the loop.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::complex::{
    homology_of, pages_over_field, NovMatrix, NovikovComplexData, NovikovHomology,
};
use super::ring::{CoeffLattice, Mode, NovikovError};
use crate::algebra::IntMatrix;
use crate::family::{fiber_order, FamilyDescriptor};
use crate::morse::MorseData;

/// `Σ e^class · matrix`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockTerm {
    pub class: Vec<i64>,
    pub matrix: IntMatrix,
}

/// Block along one base flow line `from_x → to_y`. Blocks whose flow line crosses the
/// reference cut pick up the factor `e^χ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NovikovBlock {
    pub from_x: String,
    pub to_y: String,
    pub crosses_cut: bool,
    pub terms: Vec<BlockTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NovikovFamily {
    pub lattice: CoeffLattice,
    pub base: MorseData,
    pub fibers: BTreeMap<String, NovikovComplexData>,
    pub blocks: Vec<NovikovBlock>,
    pub chi: Vec<i64>,
}

/// Filtered complex over `Λ`: differentials plus base index of every generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovikovFamilyComplex {
    pub labels: Vec<Vec<String>>,
    pub levels: Vec<Vec<usize>>,
    pub d: Vec<NovMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NovikovFamilyPages {
    /// `pages[r - 1]` holds the dimensions over the fraction field of `Λ` on page `r`.
    pub pages: Vec<BTreeMap<(i64, i64), usize>>,
}

impl NovikovFamily {
    fn check_base(&self) -> Result<(), NovikovError> {
        self.base
            .validate()
            .map_err(|e| NovikovError::Invalid(e.to_string()))?;
        if self.base.top_index() > 1 {
            return Err(NovikovError::Unsupported(
                "family Novikov complexes need a one-dimensional base".into(),
            ));
        }
        if self.chi.len() != self.lattice.rank {
            return Err(NovikovError::LatticeMismatch {
                expected: self.lattice.rank,
                found: self.chi.len(),
            });
        }
        for f in self.fibers.values() {
            if f.lattice != self.lattice {
                return Err(NovikovError::Invalid("fiber lattices differ".into()));
            }
        }
        for c in &self.base.critical_points {
            if !self.fibers.contains_key(&c.label) {
                return Err(NovikovError::Invalid(format!("no fiber at {}", c.label)));
            }
        }
        Ok(())
    }

    fn fiber_shape(&self, x: &str) -> MorseData {
        let f = &self.fibers[x];
        MorseData {
            critical_points: f.critical_points.clone(),
            flows: vec![],
            orientation: "novikov".into(),
        }
    }

    /// Block matrix including the reference twist.
    pub fn block_matrix(&self, b: &NovikovBlock) -> Result<NovMatrix, NovikovError> {
        let lat = &self.lattice;
        let rows = self.fibers[&b.to_y].critical_points.len();
        let cols = self.fibers[&b.from_x].critical_points.len();
        let mut out = NovMatrix::zeros(lat, rows, cols);
        for t in &b.terms {
            if t.matrix.shape() != (rows, cols) {
                return Err(NovikovError::Invalid(format!(
                    "block {} -> {} has shape {:?}",
                    b.from_x,
                    b.to_y,
                    t.matrix.shape()
                )));
            }
            if t.class.len() != lat.rank {
                return Err(NovikovError::LatticeMismatch {
                    expected: lat.rank,
                    found: t.class.len(),
                });
            }
            let class: Vec<i64> = if b.crosses_cut {
                t.class.iter().zip(&self.chi).map(|(a, c)| a + c).collect()
            } else {
                t.class.clone()
            };
            for i in 0..rows {
                for j in 0..cols {
                    let v = &t.matrix[(i, j)];
                    let x = lat.monomial(&class, BigRational::from_integer(v.clone()));
                    let cur = out.get(i, j).clone();
                    out.set(i, j, lat.add(&cur, &x)?);
                }
            }
        }
        Ok(out)
    }

    pub fn assemble(&self) -> Result<NovikovFamilyComplex, NovikovError> {
        self.check_base()?;
        let lat = &self.lattice;
        let fiber_dim = self
            .fibers
            .values()
            .flat_map(|f| f.critical_points.iter().map(|c| c.index))
            .max()
            .unwrap_or(0);
        let base_order: Vec<(String, usize)> = self
            .base
            .by_index()
            .into_iter()
            .enumerate()
            .flat_map(|(i, xs)| xs.into_iter().map(move |x| (x, i)))
            .collect();
        let top = 1 + fiber_dim + 1;
        let mut labels = vec![Vec::new(); top];
        let mut levels = vec![Vec::new(); top];
        let mut index: HashMap<(String, String), (usize, usize)> = HashMap::new();
        for n in 0..top {
            for (x, i) in &base_order {
                for (p, j) in fiber_order(&self.fiber_shape(x)) {
                    if i + j == n {
                        index.insert((x.clone(), p.clone()), (n, labels[n].len()));
                        labels[n].push(format!("({x},{p})"));
                        levels[n].push(*i);
                    }
                }
            }
        }
        while labels.len() > 1 && labels.last().is_some_and(Vec::is_empty) {
            labels.pop();
            levels.pop();
        }
        let mut d: Vec<NovMatrix> = (0..labels.len())
            .map(|n| {
                NovMatrix::zeros(
                    lat,
                    if n == 0 { 0 } else { labels[n - 1].len() },
                    labels[n].len(),
                )
            })
            .collect();
        let base_index: HashMap<String, usize> = base_order.iter().cloned().collect();
        let add = |d: &mut Vec<NovMatrix>,
                   src: (usize, usize),
                   dst: (usize, usize),
                   x: super::ring::NovikovElement| {
            let cur = d[src.0].get(dst.1, src.1).clone();
            let v = lat.add(&cur, &x)?;
            d[src.0].set(dst.1, src.1, v);
            Ok::<_, NovikovError>(())
        };
        for (x, fib) in &self.fibers {
            let Some(&i) = base_index.get(x) else {
                continue;
            };
            let sign = if i % 2 == 0 { 1 } else { -1 };
            for f in &fib.flows {
                let src = index[&(x.clone(), f.from.clone())];
                let dst = *index
                    .get(&(x.clone(), f.to.clone()))
                    .ok_or_else(|| NovikovError::Invalid(format!("unknown point {}", f.to)))?;
                if src.0 != dst.0 + 1 {
                    return Err(NovikovError::Invalid(format!(
                        "fiber flow {} -> {} at {x} skips an index",
                        f.from, f.to
                    )));
                }
                add(&mut d, src, dst, lat.int_monomial(&f.class, sign * f.count))?;
            }
        }
        for b in &self.blocks {
            let (Some(&i), Some(&k)) = (base_index.get(&b.from_x), base_index.get(&b.to_y)) else {
                return Err(NovikovError::Invalid(format!(
                    "block {} -> {} off the base",
                    b.from_x, b.to_y
                )));
            };
            if i != k + 1 {
                return Err(NovikovError::Invalid(format!(
                    "block {} -> {} does not follow a base flow",
                    b.from_x, b.to_y
                )));
            }
            let m = self.block_matrix(b)?;
            let src = fiber_order(&self.fiber_shape(&b.from_x));
            let dst = fiber_order(&self.fiber_shape(&b.to_y));
            for (c, (p, jp)) in src.iter().enumerate() {
                for (r, (q, jq)) in dst.iter().enumerate() {
                    let v = m.get(r, c);
                    if v.terms.is_empty() {
                        continue;
                    }
                    if jp != jq {
                        return Err(NovikovError::Invalid(format!(
                            "block entry {p} -> {q} changes the fiber index"
                        )));
                    }
                    add(
                        &mut d,
                        index[&(b.from_x.clone(), p.clone())],
                        index[&(b.to_y.clone(), q.clone())],
                        v.clone(),
                    )?;
                }
            }
        }
        for n in 2..d.len() {
            let sq = d[n - 1].mul(lat, &d[n])?;
            if let Some(k) = sq.data.iter().position(|x| x.has_terms()) {
                return Err(NovikovError::NotAComplex {
                    from: labels[n][k % sq.cols].clone(),
                    to: labels[n - 2][k / sq.cols].clone(),
                });
            }
        }
        Ok(NovikovFamilyComplex { labels, levels, d })
    }

    pub fn with_chi(&self, chi: Vec<i64>) -> NovikovFamily {
        NovikovFamily {
            chi,
            ..self.clone()
        }
    }

    /// Exact family over a circle base, all classes zero; blocks listed in `cut` cross the cut.
    pub fn from_descriptor(
        d: &FamilyDescriptor,
        lattice: &CoeffLattice,
        cut: &[usize],
        chi: Vec<i64>,
    ) -> Result<Self, NovikovError> {
        d.validate()
            .map_err(|e| NovikovError::Invalid(e.to_string()))?;
        let fibers = d
            .fibers
            .iter()
            .map(|(x, m)| (x.clone(), NovikovComplexData::from_morse(lattice, m)))
            .collect();
        let blocks = d
            .blocks
            .iter()
            .enumerate()
            .map(|(n, b)| NovikovBlock {
                from_x: b.from_x.clone(),
                to_y: b.to_y.clone(),
                crosses_cut: cut.contains(&n),
                terms: vec![BlockTerm {
                    class: vec![0; lattice.rank],
                    matrix: b.matrix.clone(),
                }],
            })
            .collect();
        Ok(NovikovFamily {
            lattice: lattice.clone(),
            base: d.base.clone(),
            fibers,
            blocks,
            chi,
        })
    }
}

pub fn novikov_family(f: &NovikovFamily) -> Result<NovikovFamilyComplex, NovikovError> {
    f.assemble()
}

impl NovikovFamilyComplex {
    pub fn homology(
        &self,
        lat: &CoeffLattice,
        mode: Mode,
        precision: &BigRational,
    ) -> Result<NovikovHomology, NovikovError> {
        homology_of(lat, &self.d, mode, precision)
    }

    /// Pages `E¹ … E^{max_r}` as dimensions over the fraction field of `Λ`.
    pub fn pages(
        &self,
        lat: &CoeffLattice,
        max_r: usize,
        precision: &BigRational,
    ) -> Result<NovikovFamilyPages, NovikovError> {
        let pages = (1..=max_r)
            .map(|r| pages_over_field(lat, &self.levels, &self.d, r, precision))
            .collect::<Result<_, _>>()?;
        Ok(NovikovFamilyPages { pages })
    }
}

/// Outcome of shifting the reference class by `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RescalingReport {
    /// Every crossing block was multiplied by exactly `e^A` and nothing else changed.
    pub blocks_rescaled: bool,
    pub pages_equal: bool,
    pub homology_ranks: (Vec<usize>, Vec<usize>),
}

impl RescalingReport {
    pub fn ok(&self) -> bool {
        self.blocks_rescaled && self.pages_equal && self.homology_ranks.0 == self.homology_ranks.1
    }
}

pub fn reference_rescaling_check(
    f: &NovikovFamily,
    a: &[i64],
    precision: &BigRational,
) -> Result<RescalingReport, NovikovError> {
    let lat = &f.lattice;
    if a.len() != lat.rank {
        return Err(NovikovError::LatticeMismatch {
            expected: lat.rank,
            found: a.len(),
        });
    }
    let g = f.with_chi(f.chi.iter().zip(a).map(|(c, x)| c + x).collect());
    let unit = lat.int_monomial(a, 1);
    let mut blocks_rescaled = true;
    for b in &f.blocks {
        let before = f.block_matrix(b)?;
        let after = g.block_matrix(b)?;
        let expect = if b.crosses_cut {
            before.scale_all(lat, &unit)?
        } else {
            before
        };
        blocks_rescaled &= after == expect;
    }
    let (cf, cg) = (f.assemble()?, g.assemble()?);
    let max_r = cf.levels.iter().flatten().max().copied().unwrap_or(0) + 2;
    let pages_equal = cf.pages(lat, max_r, precision)? == cg.pages(lat, max_r, precision)?;
    let rk = |c: &NovikovFamilyComplex| -> Result<Vec<usize>, NovikovError> {
        let p = c.pages(lat, max_r, precision)?;
        let last = p.pages.last().cloned().unwrap_or_default();
        let mut out = vec![0; c.d.len()];
        for ((i, j), v) in last {
            out[(i + j) as usize] += v;
        }
        Ok(out)
    };
    Ok(RescalingReport {
        blocks_rescaled,
        pages_equal,
        homology_ranks: (rk(&cf)?, rk(&cg)?),
    })
}

/// Trivial torus bundle whose circle fibers carry a closed 1-form of period `−c`.
pub fn torus_with_fiber_class(c: i64) -> NovikovFamily {
    let fiber = super::complex::circle_one_form(c);
    let lattice = fiber.lattice.clone();
    let base = crate::morse::circle_base();
    let fibers = base
        .critical_points
        .iter()
        .map(|x| (x.label.clone(), fiber.clone()))
        .collect();
    let blocks = base
        .flows
        .iter()
        .enumerate()
        .map(|(n, fl)| NovikovBlock {
            from_x: fl.from.clone(),
            to_y: fl.to.clone(),
            crosses_cut: n == 1,
            terms: vec![BlockTerm {
                class: vec![0],
                matrix: IntMatrix::identity(2).scale(&fl.count.into()),
            }],
        })
        .collect();
    NovikovFamily {
        lattice,
        base,
        fibers,
        blocks,
        chi: vec![0],
    }
}

/// Free fiber `ℤⁿ` in degree `j` with monodromy `Φ` along the crossing flow line, Novikov
/// coefficients `ω = (omega)` and reference class `χ`.
pub fn monodromy_family(
    phi: &IntMatrix,
    j: usize,
    omega: &[i64],
    chi: Vec<i64>,
) -> Result<NovikovFamily, NovikovError> {
    let d = crate::library::circle_monodromy_family(phi, j);
    NovikovFamily::from_descriptor(&d, &CoeffLattice::from_i64(omega), &[1], chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::ring::rat;

    #[test]
    fn torus_with_fiber_class_is_acyclic() {
        let f = torus_with_fiber_class(2);
        let c = f.assemble().unwrap();
        let h = c.homology(&f.lattice, Mode::Field, &rat(-12)).unwrap();
        assert!(h.vanishes(), "{h:?}");
        let p = c.pages(&f.lattice, 3, &rat(-12)).unwrap();
        assert!(p.pages[1].values().all(|&v| v == 0));
    }

    #[test]
    fn chi_twists_the_cokernel() {
        let phi = IntMatrix::from_rows(&[[0, 1], [1, 0]]);
        let f = monodromy_family(&phi, 0, &[0], vec![0]).unwrap();
        let e2 = &f
            .assemble()
            .unwrap()
            .pages(&f.lattice, 2, &rat(-8))
            .unwrap()
            .pages[1];
        assert_eq!(e2[&(0, 0)], 1);
        let g = monodromy_family(&phi, 0, &[-1], vec![1]).unwrap();
        let e2 = &g
            .assemble()
            .unwrap()
            .pages(&g.lattice, 2, &rat(-8))
            .unwrap()
            .pages[1];
        assert_eq!(e2.get(&(0, 0)).copied().unwrap_or(0), 0);
    }

    #[test]
    fn rescaling() {
        let f = torus_with_fiber_class(1);
        assert!(reference_rescaling_check(&f, &[0], &rat(-8)).unwrap().ok());
        assert!(reference_rescaling_check(&f, &[3], &rat(-8)).unwrap().ok());
    }
}
