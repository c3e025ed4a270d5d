//! Integer descriptors assembled from signed counts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::shoot::{label_seed, Counts, Equilibrium, FlowLineRecord, Shooter, System};
use super::{BaseKind, ChartedBundle, FlowcountError, Metric, Tolerances};
use crate::algebra::IntMatrix;
use crate::cubical::{assemble_cubical, Cube, Cubulation, Face};
use crate::family::{assemble, fiber_order, Block, ContinuationDescriptor, FamilyDescriptor};
use crate::morse::{CriticalPoint, Flow, MorseData};

/// Every flow line that went into an emitted descriptor.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EmitReport {
    pub records: Vec<FlowLineRecord>,
    pub flags: Vec<String>,
}

impl EmitReport {
    pub fn energy_violations(&self) -> Vec<&FlowLineRecord> {
        self.records.iter().filter(|r| !r.within_bound()).collect()
    }

    fn absorb(&mut self, other: EmitReport) {
        self.records.extend(other.records);
        self.flags.extend(other.flags);
    }

    fn take(&mut self, counts: &[(Equilibrium, Counts)]) {
        for (_, c) in counts {
            self.records.extend(c.records.iter().cloned());
            self.flags.extend(c.flags.iter().cloned());
        }
    }
}

fn count_all(
    sh: &Shooter,
    sources: Vec<Equilibrium>,
    seed: u64,
) -> Result<Vec<(Equilibrium, Counts)>, FlowcountError> {
    sources
        .into_par_iter()
        .map(|src| {
            let c = sh.count(&src, label_seed(seed, &src.label()))?;
            Ok((src, c))
        })
        .collect()
}

fn fiber_morse_data(sh: &Shooter, bi: usize) -> MorseData {
    MorseData {
        critical_points: sh.fibers[bi]
            .iter()
            .map(|p| CriticalPoint {
                label: p.label.clone(),
                index: p.index,
            })
            .collect(),
        flows: vec![],
        orientation: "standard".into(),
    }
}

/// Morse data of the fiber over `t`, labelled in the cover coordinate at `t`.
pub fn emit_fiber(
    bundle: &ChartedBundle,
    t: f64,
    tol: &Tolerances,
    seed: u64,
) -> Result<(MorseData, EmitReport), FlowcountError> {
    let point = bundle.with_base(BaseKind::Point { t });
    let sh = Shooter::new(
        System {
            bundle: &point,
            target_metric: None,
            fiber_active: true,
        },
        tol,
    )?;
    let counts = count_all(
        &sh,
        sh.sources().into_iter().filter(|e| e.index == 1).collect(),
        seed,
    )?;
    let mut m = fiber_morse_data(&sh, 0);
    for (src, c) in &counts {
        for r in &c.records {
            m.flows.push(Flow {
                from: src.fiber.clone(),
                to: r.target_eq.fiber.clone(),
                count: r.sign,
            });
        }
    }
    m.validate()
        .map_err(|e| FlowcountError::Inconsistent(e.to_string()))?;
    let mut report = EmitReport::default();
    report.take(&counts);
    Ok((m, report))
}

fn base_index_of(m: &MorseData) -> BTreeMap<String, usize> {
    m.critical_points
        .iter()
        .map(|c| (c.label.clone(), c.index))
        .collect()
}

/// Total-space counts that stay over one base point must be the fiber counts times
/// `(−1)^i`, `i` the base index.
fn check_vertical(
    counts: &[(Equilibrium, Counts)],
    fibers: &BTreeMap<String, MorseData>,
    base_index: &BTreeMap<String, usize>,
) -> Result<(), FlowcountError> {
    let mut total: BTreeMap<(String, String, String), Vec<i64>> = BTreeMap::new();
    for (src, c) in counts {
        for r in &c.records {
            if r.target_eq.base == src.base && r.target_eq.lift == 0 {
                total
                    .entry((
                        src.base.clone(),
                        src.fiber.clone(),
                        r.target_eq.fiber.clone(),
                    ))
                    .or_default()
                    .push(r.sign);
            }
        }
    }
    let mut fiber: BTreeMap<(String, String, String), Vec<i64>> = BTreeMap::new();
    for (x, m) in fibers {
        let Some(&i) = base_index.get(x) else {
            continue;
        };
        let sign = if i % 2 == 0 { 1 } else { -1 };
        for f in &m.flows {
            fiber
                .entry((x.clone(), f.from.clone(), f.to.clone()))
                .or_default()
                .push(sign * f.count);
        }
    }
    for v in total.values_mut().chain(fiber.values_mut()) {
        v.sort();
    }
    fiber.retain(|(x, _, _), _| counts.iter().any(|(s, _)| &s.base == x && s.index > 0));
    total.retain(|(x, _, _), _| fiber.keys().any(|k| &k.0 == x) || !fibers.contains_key(x));
    if total != fiber {
        return Err(FlowcountError::Inconsistent(format!(
            "vertical total-space counts {total:?} disagree with signed fiber counts {fiber:?}"
        )));
    }
    Ok(())
}

fn block_matrix(
    counts: &[(Equilibrium, Counts)],
    from: (&str, &MorseData),
    to: (&str, i64, &MorseData),
    layer: u8,
) -> IntMatrix {
    let src = fiber_order(from.1);
    let dst = fiber_order(to.2);
    let mut m = IntMatrix::zeros(dst.len(), src.len());
    for (s, c) in counts {
        if s.base != from.0 {
            continue;
        }
        let Some(col) = src.iter().position(|(p, _)| p == &s.fiber) else {
            continue;
        };
        for r in &c.records {
            let t = &r.target_eq;
            if t.layer != layer || t.base != to.0 || t.lift != to.1 {
                continue;
            }
            let Some(row) = dst.iter().position(|(q, _)| q == &t.fiber) else {
                continue;
            };
            m[(row, col)] += r.sign;
        }
    }
    m
}

fn fail_on_flags(report: &EmitReport) -> Result<(), FlowcountError> {
    if report.flags.is_empty() {
        Ok(())
    } else {
        Err(FlowcountError::Unstable(report.flags.clone()))
    }
}

/// Base Morse data on the circle together with the deck translate reached by each flow line.
fn circle_base(
    bundle: &ChartedBundle,
    tol: &Tolerances,
    seed: u64,
) -> Result<(MorseData, Vec<i64>, EmitReport), FlowcountError> {
    let sh = Shooter::new(
        System {
            bundle,
            target_metric: None,
            fiber_active: false,
        },
        tol,
    )?;
    let counts = count_all(
        &sh,
        sh.sources().into_iter().filter(|e| e.index == 1).collect(),
        seed,
    )?;
    let mut m = MorseData {
        critical_points: sh
            .bases
            .iter()
            .map(|b| CriticalPoint {
                label: b.label.clone(),
                index: b.index,
            })
            .collect(),
        flows: vec![],
        orientation: "standard".into(),
    };
    let mut lifts = Vec::new();
    for (src, c) in &counts {
        for r in &c.records {
            m.flows.push(Flow {
                from: src.base.clone(),
                to: r.target_eq.base.clone(),
                count: r.sign,
            });
            lifts.push(r.target_eq.lift);
        }
    }
    let mut seen = lifts.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != lifts.len() {
        return Err(FlowcountError::Inconsistent(
            "two base flow lines reach the same deck translate".into(),
        ));
    }
    let mut report = EmitReport::default();
    report.take(&counts);
    Ok((m, lifts, report))
}

/// Family descriptor of a circle bundle over the circle.
pub fn emit_descriptor(
    bundle: &ChartedBundle,
    tol: &Tolerances,
    seed: u64,
) -> Result<(FamilyDescriptor, EmitReport), FlowcountError> {
    if bundle.base != BaseKind::Circle {
        return Err(FlowcountError::Unsupported(
            "family descriptors are emitted for circle bases".into(),
        ));
    }
    bundle.check()?;
    let (base, lifts, mut report) = circle_base(bundle, tol, seed)?;
    let sh = Shooter::new(
        System {
            bundle,
            target_metric: None,
            fiber_active: true,
        },
        tol,
    )?;
    let mut fibers = BTreeMap::new();
    for (bi, bp) in sh.bases.iter().enumerate() {
        let (m, r) = emit_fiber(bundle, bp.t_chart, tol, seed)?;
        debug_assert_eq!(m.critical_points, fiber_morse_data(&sh, bi).critical_points);
        report.absorb(r);
        fibers.insert(bp.label.clone(), m);
    }
    let counts = count_all(
        &sh,
        sh.sources().into_iter().filter(|e| e.index > 0).collect(),
        seed,
    )?;
    report.take(&counts);
    fail_on_flags(&report)?;
    let base_index = base_index_of(&base);
    check_vertical(&counts, &fibers, &base_index)?;
    let blocks = base
        .flows
        .iter()
        .zip(&lifts)
        .map(|(f, &lift)| Block {
            k: 1,
            from_x: f.from.clone(),
            to_y: f.to.clone(),
            matrix: block_matrix(
                &counts,
                (&f.from, &fibers[&f.from]),
                (&f.to, lift, &fibers[&f.to]),
                0,
            ),
        })
        .collect();
    let d = FamilyDescriptor {
        base,
        dim_base: 1,
        fiber_dim: 1,
        fibers,
        blocks,
        oriented_fibers: bundle.epsilon == 1,
    };
    assemble(&d)?;
    Ok((d, report))
}

/// Cubical data over the circle cubulated by vertices `v0` (`t = 0`), `v1` (`t = ½`) and edges
/// `e0 = [v0, v1]`, `e1 = [v1, v0]`, the latter crossing the chart transition at `v1`.
pub fn emit_cubical(
    bundle: &ChartedBundle,
    tol: &Tolerances,
    seed: u64,
) -> Result<(Cubulation, EmitReport), FlowcountError> {
    if bundle.base != BaseKind::Circle {
        return Err(FlowcountError::Unsupported(
            "cubical data is emitted for circle bases".into(),
        ));
    }
    bundle.check()?;
    let mut report = EmitReport::default();
    let mut fiber_data = BTreeMap::new();
    for (v, t) in [("v0", 0.0), ("v1", 0.5)] {
        let (m, r) = emit_fiber(bundle, t, tol, seed)?;
        report.absorb(r);
        fiber_data.insert(v.to_string(), m);
    }
    let cube = |id: &str, dim: usize, faces: &[(&str, i64)]| Cube {
        id: id.into(),
        dim,
        faces: faces
            .iter()
            .map(|&(f, s)| Face {
                id: f.into(),
                sign: s,
            })
            .collect(),
        degenerate: false,
        metric: "g".into(),
    };
    let mut cubes = vec![cube("v0", 0, &[]), cube("v1", 0, &[])];
    let mut blocks = Vec::new();
    // (edge, t0, t1, vertex at u = 0, vertex at u = 1)
    for (e, t0, t1, at0, at1) in [("e0", 0.0, 0.5, "v0", "v1"), ("e1", -0.5, 0.0, "v1", "v0")] {
        cubes.push(cube(e, 1, &[(at1, 1), (at0, -1)]));
        let edge = bundle.with_base(BaseKind::Interval { t0, t1 });
        let (center, r) = emit_fiber(bundle, edge.base.sigma(0.5), tol, seed)?;
        report.absorb(r);
        let sh = Shooter::new(
            System {
                bundle: &edge,
                target_metric: None,
                fiber_active: true,
            },
            tol,
        )?;
        let counts = count_all(
            &sh,
            sh.sources()
                .into_iter()
                .filter(|s| s.base == "c" && s.index > 0)
                .collect(),
            seed,
        )?;
        report.take(&counts);
        let local: BTreeMap<String, MorseData> =
            BTreeMap::from([("c".to_string(), center.clone())]);
        check_vertical(&counts, &local, &BTreeMap::from([("c".to_string(), 1)]))?;
        for (end, v) in [("u1", at1), ("u0", at0)] {
            let matrix = block_matrix(&counts, ("c", &center), (end, 0, &fiber_data[v]), 0);
            blocks.push(Block {
                k: 1,
                from_x: e.into(),
                to_y: v.into(),
                matrix,
            });
        }
        fiber_data.insert(e.to_string(), center);
    }
    fail_on_flags(&report)?;
    let k = Cubulation {
        cubes,
        fiber_data,
        blocks,
        fiber_dim: 1,
    };
    assemble_cubical(&k)?;
    Ok((k, report))
}

/// Continuation map between the metrics of `source` and `target` (same bundle otherwise).
pub fn emit_continuation(
    source: &ChartedBundle,
    target: &ChartedBundle,
    tol: &Tolerances,
    seed: u64,
) -> Result<(ContinuationDescriptor, EmitReport), FlowcountError> {
    if source.with_metric(Metric::flat()) != target.with_metric(Metric::flat()) {
        return Err(FlowcountError::Unsupported(
            "continuation is emitted between metrics on one bundle".into(),
        ));
    }
    let (sd, mut report) = emit_descriptor(source, tol, seed)?;
    let (td, r) = emit_descriptor(target, tol, seed)?;
    report.absorb(r);
    let full = Shooter::new(
        System {
            bundle: source,
            target_metric: Some(&target.metric),
            fiber_active: true,
        },
        tol,
    )?;
    let mut blocks = Vec::new();
    let mut phi0: BTreeMap<String, IntMatrix> = BTreeMap::new();
    for bp in &full.bases {
        let slice = source.with_base(BaseKind::Point { t: bp.t_chart });
        let sh = Shooter::new(
            System {
                bundle: &slice,
                target_metric: Some(&target.metric),
                fiber_active: true,
            },
            tol,
        )?;
        let counts = count_all(&sh, sh.sources(), seed)?;
        report.take(&counts);
        let matrix = block_matrix(
            &counts,
            ("x", &sd.fibers[&bp.label]),
            ("x", 0, &td.fibers[&bp.label]),
            1,
        );
        phi0.insert(bp.label.clone(), matrix.clone());
        blocks.push(Block {
            k: 0,
            from_x: bp.label.clone(),
            to_y: bp.label.clone(),
            matrix,
        });
    }
    let sources: Vec<Equilibrium> = full
        .sources()
        .into_iter()
        .filter(|e| e.base_index == 1 && e.fiber_index == 0)
        .collect();
    let counts = count_all(&full, sources, seed)?;
    report.take(&counts);
    fail_on_flags(&report)?;
    let (base, lifts, _) = circle_base(source, tol, seed)?;
    for (x, m) in &phi0 {
        if base_index_of(&base)[x] != 1 {
            continue;
        }
        let again = block_matrix(&counts, (x, &sd.fibers[x]), (x, 0, &td.fibers[x]), 1);
        let fiber_min: Vec<usize> = fiber_order(&sd.fibers[x])
            .iter()
            .enumerate()
            .filter(|(_, (_, j))| *j == 0)
            .map(|(k, _)| k)
            .collect();
        let rows: Vec<usize> = (0..m.rows()).collect();
        if again.select(&rows, &fiber_min) != m.select(&rows, &fiber_min) {
            return Err(FlowcountError::Inconsistent(format!(
                "continuation over {x} differs between the slice and the total space"
            )));
        }
    }
    for (f, &lift) in base.flows.iter().zip(&lifts) {
        let matrix = block_matrix(
            &counts,
            (&f.from, &sd.fibers[&f.from]),
            (&f.to, lift, &td.fibers[&f.to]),
            1,
        );
        if matrix.is_zero() {
            continue;
        }
        blocks.push(Block {
            k: 1,
            from_x: f.from.clone(),
            to_y: f.to.clone(),
            matrix,
        });
    }
    Ok((
        ContinuationDescriptor {
            source: sd,
            target: td,
            blocks,
        },
        report,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trial {
    pub seed: u64,
    pub agrees: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub epsilon: f64,
    pub tightened_agrees: bool,
    pub trials: Vec<Trial>,
    pub flags: Vec<String>,
    pub energy_violations: usize,
}

impl RegularityReport {
    pub fn stable(&self) -> bool {
        self.flags.is_empty() && self.tightened_agrees && self.trials.iter().all(|t| t.agrees)
    }
}

/// Recount after tightening the integration tolerance tenfold and after `trials` random
/// conformal perturbations of size `epsilon`; stable when every count agrees.
pub fn regularity_check(
    bundle: &ChartedBundle,
    tol: &Tolerances,
    seed: u64,
    epsilon: f64,
    trials: usize,
) -> Result<RegularityReport, FlowcountError> {
    let baseline = match emit_descriptor(bundle, tol, seed) {
        Ok(x) => x,
        Err(
            e @ (FlowcountError::Unstable(_)
            | FlowcountError::ResolutionExhausted { .. }
            | FlowcountError::Horizon { .. }),
        ) => {
            let flags = match e {
                FlowcountError::Unstable(flags) => flags,
                e => vec![e.to_string()],
            };
            return Ok(RegularityReport {
                epsilon,
                tightened_agrees: false,
                trials: vec![],
                flags,
                energy_violations: 0,
            });
        }
        Err(e) => return Err(e),
    };
    let mut energy_violations = baseline.1.energy_violations().len();
    let describe = |r: Result<(FamilyDescriptor, EmitReport), FlowcountError>| match r {
        Ok((d, rep)) if d == baseline.0 => (true, None, rep.energy_violations().len()),
        Ok((_, rep)) => (
            false,
            Some("counts changed".to_string()),
            rep.energy_violations().len(),
        ),
        Err(e) => (false, Some(e.to_string()), 0),
    };
    let (tightened_agrees, _, v) = describe(emit_descriptor(bundle, &tol.tightened(10.0), seed));
    energy_violations += v;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| rng.gen()).collect();
    let results: Vec<(Trial, usize)> = seeds
        .par_iter()
        .map(|&s| {
            if epsilon == 0.0 {
                return (
                    Trial {
                        seed: s,
                        agrees: true,
                        detail: None,
                    },
                    0,
                );
            }
            let perturbed = bundle.with_metric(bundle.metric.perturbed(epsilon, s));
            let (agrees, detail, v) = describe(emit_descriptor(&perturbed, tol, seed));
            (
                Trial {
                    seed: s,
                    agrees,
                    detail,
                },
                v,
            )
        })
        .collect();
    energy_violations += results.iter().map(|r| r.1).sum::<usize>();
    Ok(RegularityReport {
        epsilon,
        tightened_agrees,
        trials: results.into_iter().map(|r| r.0).collect(),
        flags: vec![],
        energy_violations,
    })
}
