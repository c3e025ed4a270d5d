//! Equilibria, shooting along unstable manifolds and signed counts.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::integrate::{integrate, StepControl};
use super::{wrap, BaseKind, ChartedBundle, FlowcountError, Metric, Tolerances, HALF_PI};

/// Initial displacement along the unstable frame.
const R0: f64 = 1e-3;
/// A trajectory has landed once it is this close to a sink.
const R_LAND: f64 = 1e-3;
/// Radius of the neighbourhoods used to measure dwell time and exit direction.
const R_DWELL: f64 = 5e-2;
/// Closer passes by an equilibrium of index at least the source index are unexpected.
const R_FLAG: f64 = 1e-5;
/// Bisection stops at this parameter width.
const BISECT_TOL: f64 = 1e-10;
/// Half-plane shooting stays this far from the boundary rays `φ = ±π/2`.
const HALF_PLANE_MARGIN: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint {
    pub label: String,
    /// Base coordinate.
    pub b: f64,
    /// Cover coordinate of the chart in which the fiber is labelled.
    pub t_chart: f64,
    /// Deck offset: cover `Θ` equals `εⁿ` times the chart angle.
    pub n: i64,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberPoint {
    pub label: String,
    pub theta: f64,
    pub index: usize,
}

fn reduce(t: f64) -> (f64, i64) {
    let n = (t + 1e-9).floor();
    (t - n, n as i64)
}

pub fn base_points(base: &BaseKind) -> Vec<BasePoint> {
    let bp = |label: &str, b: f64, t: f64, n: i64, index: usize| BasePoint {
        label: label.into(),
        b,
        t_chart: t,
        n,
        index,
    };
    match *base {
        BaseKind::Point { t } => vec![bp("x", 0.0, t, 0, 0)],
        BaseKind::Circle => vec![bp("x0", 0.25, 0.25, 0, 1), bp("x1", 0.75, 0.75, 0, 0)],
        BaseKind::Interval { .. } => {
            let end = |label: &str, u: f64| {
                let (t, n) = reduce(base.sigma(u));
                bp(label, u, t, n, 0)
            };
            vec![
                end("u0", 0.0),
                bp("c", 0.5, base.sigma(0.5), 0, 1),
                end("u1", 1.0),
            ]
        }
    }
}

/// Critical points of `θ ↦ f(t, θ)` on `[0, 2π)`, labelled `p0, p1, …` by angle.
pub fn fiber_points(
    bundle: &ChartedBundle,
    t: f64,
    tol: &Tolerances,
    at: &str,
) -> Result<Vec<FiberPoint>, FlowcountError> {
    const SAMPLES: usize = 1024;
    let g = |th: f64| bundle.fiber.d_theta(t, th);
    let step = TAU / SAMPLES as f64;
    let mut out = Vec::new();
    for i in 0..SAMPLES {
        let (mut lo, mut hi) = ((i as f64 + 0.5) * step, (i as f64 + 1.5) * step);
        let (glo, ghi) = (g(lo), g(hi));
        let h2 = bundle.fiber.d_theta2(t, lo);
        if glo.abs() < tol.root_tol.sqrt() && h2.abs() < tol.lin_tol {
            return Err(FlowcountError::Inadmissible {
                base: at.into(),
                detail: format!("degenerate critical point near θ = {lo:.6}"),
            });
        }
        if glo.signum() == ghi.signum() {
            continue;
        }
        while hi - lo > tol.root_tol {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == glo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let th = wrap(0.5 * (lo + hi));
        let second = bundle.fiber.d_theta2(t, th);
        if second.abs() < tol.lin_tol {
            return Err(FlowcountError::Inadmissible {
                base: at.into(),
                detail: format!("degenerate critical point at θ = {th:.6}"),
            });
        }
        out.push(FiberPoint {
            label: String::new(),
            theta: th,
            index: usize::from(second < 0.0),
        });
    }
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    out.dedup_by(|a, b| (a.theta - b.theta).abs() < 1e-9);
    for (k, p) in out.iter_mut().enumerate() {
        p.label = format!("p{k}");
    }
    if out.is_empty() {
        return Err(FlowcountError::Inadmissible {
            base: at.into(),
            detail: "no critical points on the fiber".into(),
        });
    }
    Ok(out)
}

/// Equilibrium of the vector field, located on the cover.
#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    /// `0` or `1`: the end of the continuation parameter (always `0` without continuation).
    pub layer: u8,
    pub base: String,
    /// Deck translate of the base point.
    pub lift: i64,
    pub n: i64,
    pub fiber: String,
    pub winding: i64,
    pub y: [f64; 3],
    pub index: usize,
    pub base_index: usize,
    pub fiber_index: usize,
    /// Oriented unstable frame in cover coordinates: `s`, then base, then fiber.
    pub unstable: Vec<[f64; 3]>,
}

impl Equilibrium {
    pub fn key(&self) -> (u8, &str, i64, &str, i64) {
        (self.layer, &self.base, self.lift, &self.fiber, self.winding)
    }

    pub fn label(&self) -> String {
        let mut s = format!("({},{}", self.base, self.fiber);
        if self.lift != 0 || self.winding != 0 {
            s.push_str(&format!(";{},{}", self.lift, self.winding));
        }
        s.push(')');
        if self.layer == 1 {
            s.push('\'');
        }
        s
    }
}

/// Which coordinates move.
#[derive(Clone, Debug)]
pub struct System<'a> {
    pub bundle: &'a ChartedBundle,
    /// With a target metric the field acquires `s' = s(1 − s)(1 + s)` and the metric
    /// interpolates from the bundle's (`s = 0`) to the target (`s = 1`).
    pub target_metric: Option<&'a Metric>,
    pub fiber_active: bool,
}

impl System<'_> {
    fn continuation(&self) -> bool {
        self.target_metric.is_some()
    }

    /// State `[s, b, Θ, fiber energy, C]`.
    pub fn field(&self, y: &[f64; 5]) -> [f64; 5] {
        let base = &self.bundle.base;
        let s = y[0];
        let ds = if self.continuation() {
            s * (1.0 - s) * (1.0 + s)
        } else {
            0.0
        };
        let db = base.drift(y[1]);
        let t = base.sigma(y[1]);
        let (dth, de) = if self.fiber_active {
            let rho = match self.target_metric {
                Some(m) => (1.0 - s) * self.bundle.rho(t, y[2]) + s * m.rho(t, y[2]),
                None => self.bundle.rho(t, y[2]),
            };
            let ft = self.bundle.fiber.d_theta(t, y[2]);
            (-ft / rho, ft * ft / rho)
        } else {
            (0.0, 0.0)
        };
        let dc = if self.fiber_active {
            self.bundle.fiber.sup_dt(t) * (base.dsigma() * db).abs()
        } else {
            0.0
        };
        [ds, db, dth, de, dc]
    }

    pub fn f_value(&self, y: &[f64]) -> f64 {
        if self.fiber_active {
            self.bundle.fiber.value(self.bundle.base.sigma(y[1]), y[2])
        } else {
            0.0
        }
    }
}

/// One isolated flow line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowLineRecord {
    pub source: String,
    pub target: String,
    #[serde(skip)]
    pub target_eq: TargetRef,
    pub sign: i64,
    /// Branch (`±1`) for one-dimensional unstable manifolds, boundary angle otherwise.
    pub parameter: f64,
    pub energy: f64,
    pub bound: f64,
}

impl FlowLineRecord {
    pub fn within_bound(&self) -> bool {
        self.energy <= self.bound + 1e-6 * (1.0 + self.bound.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TargetRef {
    pub layer: u8,
    pub base: String,
    pub lift: i64,
    pub fiber: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counts {
    pub source: String,
    pub records: Vec<FlowLineRecord>,
    /// Evidence of connections of the wrong dimension.
    pub flags: Vec<String>,
}

#[derive(Clone)]
struct Dwell {
    eq: Equilibrium,
    time: f64,
    min_dist: f64,
    at_min: [f64; 5],
    inside: bool,
    exit: Option<[f64; 3]>,
}

#[derive(Clone)]
struct Trace {
    landing: Option<(Equilibrium, [f64; 5])>,
    dwells: Vec<Dwell>,
}

pub struct Shooter<'a> {
    pub sys: System<'a>,
    tol: &'a Tolerances,
    pub bases: Vec<BasePoint>,
    pub fibers: Vec<Vec<FiberPoint>>,
}

impl<'a> Shooter<'a> {
    pub fn new(sys: System<'a>, tol: &'a Tolerances) -> Result<Self, FlowcountError> {
        sys.bundle.check()?;
        let bases = base_points(&sys.bundle.base);
        let fibers = if sys.fiber_active {
            bases
                .iter()
                .map(|b| fiber_points(sys.bundle, b.t_chart, tol, &b.label))
                .collect::<Result<_, _>>()?
        } else {
            bases
                .iter()
                .map(|_| {
                    vec![FiberPoint {
                        label: "-".into(),
                        theta: 0.0,
                        index: 0,
                    }]
                })
                .collect()
        };
        Ok(Shooter {
            sys,
            tol,
            bases,
            fibers,
        })
    }

    fn lifts(&self) -> bool {
        matches!(self.sys.bundle.base, BaseKind::Circle)
    }

    fn eps_pow(&self, n: i64) -> f64 {
        if self.sys.bundle.epsilon == -1 && n.rem_euclid(2) == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn equilibrium(
        &self,
        layer: u8,
        bi: usize,
        lift: i64,
        fi: usize,
        winding: i64,
    ) -> Equilibrium {
        let bp = &self.bases[bi];
        let fp = &self.fibers[bi][fi];
        let n = bp.n + lift;
        let e = self.eps_pow(n);
        let cont = self.sys.continuation();
        let base_active = self.sys.bundle.base.dim() > 0;
        let theta = if self.sys.fiber_active {
            e * (fp.theta + TAU * winding as f64)
        } else {
            0.0
        };
        let mut unstable = Vec::new();
        if cont && layer == 0 {
            unstable.push([1.0, 0.0, 0.0]);
        }
        let base_index = if base_active { bp.index } else { 0 };
        if base_index == 1 {
            unstable.push([0.0, 1.0, 0.0]);
        }
        if fp.index == 1 {
            unstable.push([0.0, 0.0, e]);
        }
        Equilibrium {
            layer,
            base: bp.label.clone(),
            lift,
            n,
            fiber: fp.label.clone(),
            winding,
            y: [f64::from(layer), bp.b + lift as f64, theta],
            index: unstable.len(),
            base_index,
            fiber_index: fp.index,
            unstable,
        }
    }

    /// Sources: equilibria on the `s = 0` layer in the fundamental domain.
    pub fn sources(&self) -> Vec<Equilibrium> {
        let mut out = Vec::new();
        for bi in 0..self.bases.len() {
            for fi in 0..self.fibers[bi].len() {
                out.push(self.equilibrium(0, bi, 0, fi, 0));
            }
        }
        out
    }

    pub fn nearest(&self, y: &[f64]) -> (Equilibrium, f64) {
        let cont = self.sys.continuation();
        let layer = u8::from(cont && y[0] > 0.5);
        let ds = if cont { y[0] - f64::from(layer) } else { 0.0 };
        let mut best: Option<(usize, i64, usize, i64, f64)> = None;
        for (bi, bp) in self.bases.iter().enumerate() {
            let lift = if self.lifts() {
                (y[1] - bp.b).round() as i64
            } else {
                0
            };
            let db = y[1] - bp.b - lift as f64;
            let e = self.eps_pow(bp.n + lift);
            for (fi, fp) in self.fibers[bi].iter().enumerate() {
                let (w, dth) = if self.sys.fiber_active {
                    let chart = e * y[2];
                    let w = ((chart - fp.theta) / TAU).round();
                    (w as i64, chart - fp.theta - TAU * w)
                } else {
                    (0, 0.0)
                };
                let d = (ds * ds + db * db + dth * dth).sqrt();
                if best.is_none_or(|b| d < b.4) {
                    best = Some((bi, lift, fi, w, d));
                }
            }
        }
        let (bi, lift, fi, w, d) = best.expect("at least one equilibrium");
        (self.equilibrium(layer, bi, lift, fi, w), d)
    }

    fn trace(&self, source: &Equilibrium, v: [f64; 3]) -> Trace {
        let y0 = [
            source.y[0] + R0 * v[0],
            source.y[1] + R0 * v[1],
            source.y[2] + R0 * v[2],
            0.0,
            0.0,
        ];
        let ctl = StepControl {
            rtol: self.tol.shoot_tol,
            atol: self.tol.shoot_tol * 1e-2,
            h_max: 0.05,
        };
        let mut dwells: Vec<Dwell> = Vec::new();
        let mut landing = None;
        let mut last_t = 0.0;
        integrate(
            |y| self.sys.field(y),
            y0,
            self.tol.horizon,
            ctl,
            3,
            |t, y| {
                let dt = t - last_t;
                last_t = t;
                let (eq, d) = self.nearest(y);
                if eq.index == 0 {
                    if d < R_LAND {
                        landing = Some((eq, *y));
                        return true;
                    }
                } else if eq.key() != source.key() && d < R_DWELL {
                    let pos = match dwells.iter().position(|w| w.eq.key() == eq.key()) {
                        Some(p) => p,
                        None => {
                            dwells.push(Dwell {
                                eq,
                                time: 0.0,
                                min_dist: f64::INFINITY,
                                at_min: *y,
                                inside: false,
                                exit: None,
                            });
                            dwells.len() - 1
                        }
                    };
                    let w = &mut dwells[pos];
                    w.time += dt;
                    w.inside = true;
                    if d < w.min_dist {
                        w.min_dist = d;
                        w.at_min = *y;
                    }
                }
                for w in dwells.iter_mut().filter(|w| w.inside) {
                    let disp = [y[0] - w.eq.y[0], y[1] - w.eq.y[1], y[2] - w.eq.y[2]];
                    if norm(&disp) >= R_DWELL {
                        w.inside = false;
                        w.exit = Some(disp);
                    }
                }
                false
            },
        );
        Trace { landing, dwells }
    }

    fn record(
        &self,
        source: &Equilibrium,
        target: &Equilibrium,
        sign: i64,
        parameter: f64,
        state: &[f64; 5],
    ) -> FlowLineRecord {
        let bound = self.sys.f_value(&source.y) - self.sys.f_value(state) + state[4];
        FlowLineRecord {
            source: source.label(),
            target: target.label(),
            target_eq: TargetRef {
                layer: target.layer,
                base: target.base.clone(),
                lift: target.lift,
                fiber: target.fiber.clone(),
            },
            sign,
            parameter,
            energy: state[3],
            bound,
        }
    }

    fn flag(&self, source: &Equilibrium, trace: &Trace, parameter: f64, flags: &mut Vec<String>) {
        for w in &trace.dwells {
            if w.eq.index >= source.index && w.min_dist < R_FLAG {
                flags.push(format!(
                    "{} passes within {:.1e} of {} (index {}) at parameter {parameter:.6}",
                    source.label(),
                    w.min_dist,
                    w.eq.label(),
                    w.eq.index
                ));
            }
        }
    }

    fn landed(
        &self,
        source: &Equilibrium,
        trace: &Trace,
        parameter: f64,
    ) -> Result<Equilibrium, FlowcountError> {
        trace
            .landing
            .as_ref()
            .map(|(e, _)| e.clone())
            .ok_or(FlowcountError::Horizon {
                source_label: source.label(),
                parameter,
            })
    }

    /// Signed flow lines from `source` to equilibria of index one less.
    pub fn count(&self, source: &Equilibrium, seed: u64) -> Result<Counts, FlowcountError> {
        let mut records = Vec::new();
        let mut flags = Vec::new();
        match source.unstable.len() {
            0 => {}
            1 => {
                let e = source.unstable[0];
                // the continuation parameter only runs forward
                let branches: &[i64] = if e[0] != 0.0 { &[1] } else { &[1, -1] };
                for &sign in branches {
                    let sg = sign as f64;
                    let trace = self.trace(source, [sg * e[0], sg * e[1], sg * e[2]]);
                    self.flag(source, &trace, sg, &mut flags);
                    let target = self.landed(source, &trace, sg)?;
                    let state = trace.landing.as_ref().map(|l| l.1).unwrap_or_default();
                    records.push(self.record(source, &target, sign, sg, &state));
                }
            }
            2 => self.count_planar(source, seed, &mut records, &mut flags)?,
            k => {
                return Err(FlowcountError::Unsupported(format!(
                    "{} has a {k}-dimensional unstable manifold; only curves and surfaces are shot",
                    source.label()
                )))
            }
        }
        Ok(Counts {
            source: source.label(),
            records,
            flags,
        })
    }

    fn count_planar(
        &self,
        source: &Equilibrium,
        seed: u64,
        records: &mut Vec<FlowLineRecord>,
        flags: &mut Vec<String>,
    ) -> Result<(), FlowcountError> {
        let (e1, e2) = (source.unstable[0], source.unstable[1]);
        let ray = |phi: f64| {
            let (c, s) = (phi.cos(), phi.sin());
            [
                c * e1[0] + s * e2[0],
                c * e1[1] + s * e2[1],
                c * e1[2] + s * e2[2],
            ]
        };
        let half = self.sys.continuation() && source.layer == 0;
        let n = self.tol.grid.max(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid: Vec<f64> = if half {
            let lo = -HALF_PI + HALF_PLANE_MARGIN;
            let width = PI - 2.0 * HALF_PLANE_MARGIN;
            let jitter = rng.gen_range(0.0..0.5);
            (0..=n)
                .map(|k| {
                    lo + width
                        * ((k as f64 + if k == 0 || k == n { 0.0 } else { jitter }) / n as f64)
                })
                .collect()
        } else {
            let offset = rng.gen_range(0.0..TAU / n as f64);
            (0..=n)
                .map(|k| offset + TAU * k as f64 / n as f64)
                .collect()
        };
        let mut traces = Vec::with_capacity(grid.len());
        for (k, &phi) in grid.iter().enumerate() {
            if !half && k == n {
                break;
            }
            let t = self.trace(source, ray(phi));
            self.flag(source, &t, phi, flags);
            self.landed(source, &t, phi)?;
            traces.push((phi, t));
        }
        if !half {
            // close the circle
            let t = self.trace(source, ray(grid[n]));
            traces.push((grid[n], t));
        }
        let key = |t: &Trace| {
            t.landing
                .as_ref()
                .map(|(e, _)| (e.layer, e.base.clone(), e.lift, e.fiber.clone(), e.winding))
        };
        let mut stack: Vec<(f64, Trace, f64, Trace)> = Vec::new();
        let mut it = traces.into_iter();
        let mut prev = it.next().expect("grid is non-empty");
        for (pb, tb) in it {
            stack.push((prev.0, prev.1, pb, tb.clone()));
            prev = (pb, tb);
        }
        let mut found: Vec<(f64, Trace, Trace)> = Vec::new();
        while let Some((a, ta, b, tb)) = stack.pop() {
            if key(&ta) == key(&tb) {
                continue;
            }
            if b - a < BISECT_TOL {
                found.push((0.5 * (a + b), ta, tb));
                continue;
            }
            let m = 0.5 * (a + b);
            let tm = self.trace(source, ray(m));
            self.flag(source, &tm, m, flags);
            self.landed(source, &tm, m)?;
            stack.push((a, ta, m, tm.clone()));
            stack.push((m, tm, b, tb));
        }
        found.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (phi, ta, tb) in found {
            let exhausted = |detail: &str| FlowcountError::ResolutionExhausted {
                source_label: source.label(),
                lo: phi - BISECT_TOL,
                hi: phi + BISECT_TOL,
                detail: detail.to_string(),
            };
            let qa = ta
                .dwells
                .iter()
                .max_by(|x, y| x.time.total_cmp(&y.time))
                .ok_or_else(|| exhausted("no intermediate equilibrium"))?;
            let qb = tb
                .dwells
                .iter()
                .max_by(|x, y| x.time.total_cmp(&y.time))
                .ok_or_else(|| exhausted("no intermediate equilibrium"))?;
            if qa.eq.key() != qb.eq.key() {
                return Err(exhausted(&format!(
                    "the two sides pass {} and {}",
                    qa.eq.label(),
                    qb.eq.label()
                )));
            }
            let q = &qb.eq;
            if q.index + 1 != source.index {
                flags.push(format!(
                    "{} reaches {} of index {} at parameter {phi:.6}",
                    source.label(),
                    q.label(),
                    q.index
                ));
                continue;
            }
            let eq = q.unstable[0];
            let side = |w: &Dwell| {
                w.exit
                    .map(|d| (d[0] * eq[0] + d[1] * eq[1] + d[2] * eq[2]).signum())
            };
            let (sa, sb) = (side(qa), side(qb));
            let (Some(sa), Some(sb)) = (sa, sb) else {
                return Err(exhausted(
                    "a side never leaves the intermediate equilibrium",
                ));
            };
            if sa == sb {
                return Err(exhausted("both sides leave in the same direction"));
            }
            records.push(self.record(source, q, sb as i64, phi, &qb.at_min));
        }
        Ok(())
    }
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Stable 64-bit hash used to derive per-source seeds.
pub fn label_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
