//! Numerical flow-line counting on circle bundles over low-dimensional bases.
//!
//! The bundle is described on its universal cover `ℝ × ℝ ∋ (t, Θ)` with deck transformation
//! `(t, Θ) ↦ (t + 1, εΘ)`. Fiber functions and conformal factors are deck-invariant by
//! construction, so all integration happens on the cover and chart reduction is only used to
//! name equilibria. Floating-point values never leave this module: the public outputs are
//! integer descriptors.

pub mod emit;
pub mod integrate;
pub mod shoot;

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cubical::CubicalError;
use crate::family::FamilyError;

pub use emit::{
    emit_continuation, emit_cubical, emit_descriptor, emit_fiber, regularity_check, EmitReport,
    RegularityReport,
};
pub use shoot::{Counts, FlowLineRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowcountError {
    #[error("inadmissible at {base}: {detail}")]
    Inadmissible { base: String, detail: String },
    #[error("fiber function is not compatible with the chart transition: {0}")]
    ChartIncompatible(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("trajectory from {source_label} (parameter {parameter}) did not settle within the time horizon")]
    Horizon {
        source_label: String,
        parameter: f64,
    },
    #[error(
        "resolution exhausted for {source_label} on parameter interval [{lo}, {hi}]: {detail}"
    )]
    ResolutionExhausted {
        source_label: String,
        lo: f64,
        hi: f64,
        detail: String,
    },
    #[error("inconsistent counts: {0}")]
    Inconsistent(String),
    #[error("not Morse–Smale: {}", .0.join("; "))]
    Unstable(Vec<String>),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Cubical(#[from] CubicalError),
}

/// Fiberwise function `f(t, θ)` on the cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberFunction {
    /// `cos(kθ + phase)`.
    Cos {
        k: u32,
        #[serde(default)]
        phase: f64,
    },
    /// `cos(θ − 2πt)`.
    Rotating,
    /// `sin(2πt) cos θ`: the lines `θ = 0, π` are invariant for every metric, which forces
    /// connections between critical points of equal index.
    Tangency,
}

impl FiberFunction {
    pub fn value(&self, t: f64, th: f64) -> f64 {
        match *self {
            FiberFunction::Cos { k, phase } => (k as f64 * th + phase).cos(),
            FiberFunction::Rotating => (th - TAU * t).cos(),
            FiberFunction::Tangency => (TAU * t).sin() * th.cos(),
        }
    }

    pub fn d_theta(&self, t: f64, th: f64) -> f64 {
        match *self {
            FiberFunction::Cos { k, phase } => -(k as f64) * (k as f64 * th + phase).sin(),
            FiberFunction::Rotating => -(th - TAU * t).sin(),
            FiberFunction::Tangency => -(TAU * t).sin() * th.sin(),
        }
    }

    pub fn d_theta2(&self, t: f64, th: f64) -> f64 {
        match *self {
            FiberFunction::Cos { k, phase } => -((k * k) as f64) * (k as f64 * th + phase).cos(),
            FiberFunction::Rotating => -(th - TAU * t).cos(),
            FiberFunction::Tangency => -(TAU * t).sin() * th.cos(),
        }
    }

    /// `sup_θ |∂f/∂t|` at `t`.
    pub fn sup_dt(&self, t: f64) -> f64 {
        match *self {
            FiberFunction::Cos { .. } => 0.0,
            FiberFunction::Rotating => TAU,
            FiberFunction::Tangency => TAU * (TAU * t).cos().abs(),
        }
    }
}

/// One summand `amplitude · P_seed` of `log ρ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricTerm {
    pub amplitude: f64,
    pub seed: u64,
}

/// Conformal factor `ρ = exp(Σ aᵢ Pᵢ)` where each `Pᵢ` is a seeded combination of
/// `cos(kθ)·{1, cos 2πt, sin 2πt}`, `k = 1, 2, 3`. Only cosines of `θ` appear, so `ρ` is
/// invariant under both chart transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "MetricSpec", into = "MetricSpec")]
pub struct Metric {
    pub terms: Vec<MetricTerm>,
    coeffs: Vec<[[f64; 3]; 3]>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSpec {
    terms: Vec<MetricTerm>,
}

impl From<MetricSpec> for Metric {
    fn from(m: MetricSpec) -> Self {
        Metric::new(m.terms)
    }
}

impl From<Metric> for MetricSpec {
    fn from(m: Metric) -> Self {
        MetricSpec { terms: m.terms }
    }
}

impl Metric {
    pub fn flat() -> Self {
        Metric {
            terms: vec![],
            coeffs: vec![],
        }
    }

    pub fn new(terms: Vec<MetricTerm>) -> Self {
        let coeffs = terms
            .iter()
            .map(|term| {
                let mut rng = ChaCha8Rng::seed_from_u64(term.seed);
                let mut c = [[0.0; 3]; 3];
                for row in &mut c {
                    for v in row.iter_mut() {
                        *v = term.amplitude * rng.gen_range(-1.0..1.0);
                    }
                }
                c
            })
            .collect();
        Metric { terms, coeffs }
    }

    pub fn seeded(amplitude: f64, seed: u64) -> Self {
        Self::new(vec![MetricTerm { amplitude, seed }])
    }

    /// The same metric with one more perturbation summand.
    pub fn perturbed(&self, amplitude: f64, seed: u64) -> Self {
        let mut terms = self.terms.clone();
        terms.push(MetricTerm { amplitude, seed });
        Self::new(terms)
    }

    pub fn rho(&self, t: f64, th: f64) -> f64 {
        if self.coeffs.is_empty() {
            return 1.0;
        }
        let (ct, st) = ((TAU * t).cos(), (TAU * t).sin());
        let mut p = 0.0;
        for c in &self.coeffs {
            for (k, row) in c.iter().enumerate() {
                p += ((k + 1) as f64 * th).cos() * (row[0] + row[1] * ct + row[2] * st);
            }
        }
        p.exp()
    }
}

/// Base of the bundle, given as a map `σ` from the base coordinate to the cover coordinate `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseKind {
    /// The single fiber over `t`.
    Point { t: f64 },
    /// The whole circle, `σ(b) = b`, with base function `cos 2π(b − ¼) / 4π²`: maximum `x0`
    /// at `b = ¼`, minimum `x1` at `b = ¾`, both with Hessian eigenvalue of size one.
    Circle,
    /// `σ(u) = t0 + u (t1 − t0)` on `u ∈ [0, 1]` with base function `−cos 2πu / 4π²`: maximum
    /// `c` at the center, minima `u0`, `u1` at the ends.
    Interval { t0: f64, t1: f64 },
}

impl BaseKind {
    pub fn sigma(&self, b: f64) -> f64 {
        match *self {
            BaseKind::Point { t } => t,
            BaseKind::Circle => b,
            BaseKind::Interval { t0, t1 } => t0 + b * (t1 - t0),
        }
    }

    pub fn dsigma(&self) -> f64 {
        match *self {
            BaseKind::Point { .. } => 0.0,
            BaseKind::Circle => 1.0,
            BaseKind::Interval { t0, t1 } => t1 - t0,
        }
    }

    /// Negative gradient of the base function.
    pub fn drift(&self, b: f64) -> f64 {
        match self {
            BaseKind::Point { .. } => 0.0,
            BaseKind::Circle => (TAU * (b - 0.25)).sin() / TAU,
            BaseKind::Interval { .. } => -(TAU * b).sin() / TAU,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseKind::Point { .. } => 0,
            _ => 1,
        }
    }
}

/// Tolerances for root finding, hyperbolicity and shooting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub root_tol: f64,
    /// Smallest admissible `|∂²f/∂θ²|` at a fiber critical point.
    pub lin_tol: f64,
    /// Relative integration tolerance; the absolute tolerance is a hundredth of it.
    pub shoot_tol: f64,
    /// Time horizon for a single trajectory.
    pub horizon: f64,
    /// Number of rays in the initial shooting grid of a two-dimensional unstable manifold.
    pub grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_tol: 1e-12,
            lin_tol: 1e-6,
            shoot_tol: 1e-9,
            horizon: 200.0,
            grid: 48,
        }
    }
}

impl Tolerances {
    pub fn tightened(&self, factor: f64) -> Self {
        Tolerances {
            shoot_tol: self.shoot_tol / factor,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartedBundle {
    pub base: BaseKind,
    /// `ε` in the transition `Θ ↦ εΘ` across `t ↦ t + 1`.
    pub epsilon: i32,
    pub fiber: FiberFunction,
    pub metric: Metric,
}

impl ChartedBundle {
    pub fn new(base: BaseKind, epsilon: i32, fiber: FiberFunction, metric: Metric) -> Self {
        ChartedBundle {
            base,
            epsilon,
            fiber,
            metric,
        }
    }

    pub fn with_base(&self, base: BaseKind) -> Self {
        ChartedBundle {
            base,
            ..self.clone()
        }
    }

    pub fn with_metric(&self, metric: Metric) -> Self {
        ChartedBundle {
            metric,
            ..self.clone()
        }
    }

    /// Reject data whose fiber function is not invariant under the deck transformation.
    pub fn check(&self) -> Result<(), FlowcountError> {
        if self.epsilon != 1 && self.epsilon != -1 {
            return Err(FlowcountError::ChartIncompatible(format!(
                "ε = {} is not ±1",
                self.epsilon
            )));
        }
        let eps = self.epsilon as f64;
        for i in 0..16 {
            for j in 0..32 {
                let (t, th) = (i as f64 / 16.0, TAU * j as f64 / 32.0 + 0.1);
                let diff = self.fiber.value(t + 1.0, eps * th) - self.fiber.value(t, th);
                if diff.abs() > 1e-9 {
                    return Err(FlowcountError::ChartIncompatible(format!(
                        "f(t + 1, {}θ) ≠ f(t, θ) at t = {t}, θ = {th:.3}",
                        if eps > 0.0 { "" } else { "−" }
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn rho(&self, t: f64, th: f64) -> f64 {
        self.metric.rho(t, th)
    }
}

/// Built-in bundles over the circle.
pub const RECIPES: &[&str] = &[
    "torus",
    "klein",
    "rotating_torus",
    "tangency",
    "s2_combinatorial",
    "sphere_base_toy",
];

pub fn recipe(name: &str) -> Result<ChartedBundle, FlowcountError> {
    let metric = Metric::seeded(0.1, 11);
    let cos = FiberFunction::Cos { k: 1, phase: 0.0 };
    match name {
        "torus" => Ok(ChartedBundle::new(BaseKind::Circle, 1, cos, metric)),
        "klein" => Ok(ChartedBundle::new(BaseKind::Circle, -1, cos, metric)),
        "rotating_torus" => Ok(ChartedBundle::new(
            BaseKind::Circle,
            1,
            FiberFunction::Rotating,
            metric,
        )),
        "tangency" => Ok(ChartedBundle::new(
            BaseKind::Circle,
            1,
            FiberFunction::Tangency,
            metric,
        )),
        "s2_combinatorial" => Err(FlowcountError::Unsupported(
            "S¹ × S² has a 2-sphere fiber and is supplied combinatorially".into(),
        )),
        "sphere_base_toy" => Err(FlowcountError::Unsupported(
            "numerical counting supports bases of dimension at most one".into(),
        )),
        other => Err(FlowcountError::Unsupported(format!(
            "unknown bundle recipe {other:?}"
        ))),
    }
}

/// `θ` reduced to `[0, 2π)`.
pub(crate) fn wrap(th: f64) -> f64 {
    let r = th.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r
    }
}

pub(crate) const HALF_PI: f64 = PI / 2.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipes_are_chart_compatible() {
        for name in ["torus", "klein", "rotating_torus", "tangency"] {
            recipe(name).unwrap().check().unwrap();
        }
        let bad = ChartedBundle::new(
            BaseKind::Circle,
            -1,
            FiberFunction::Rotating,
            Metric::flat(),
        );
        assert!(matches!(
            bad.check(),
            Err(FlowcountError::ChartIncompatible(_))
        ));
    }

    #[test]
    fn metric_is_deck_invariant() {
        let m = Metric::seeded(0.5, 3);
        for (t, th) in [(0.1, 0.3), (0.7, 2.0), (-0.4, 5.5)] {
            assert!((m.rho(t + 1.0, -th) - m.rho(t, th)).abs() < 1e-12);
            assert!(m.rho(t, th) > 0.0);
        }
    }
}
