//! Named consistency checks, each producing a structured pass/fail report.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{FgAbGroup, IntMatrix};
use crate::cubical::{
    assemble_cubical, compare_with_family, klein_cubical, mayer_vietoris, torus_cubical, Cubulation,
};
use crate::family::{
    assemble, e2_crosscheck, family_pages, poincare_check, product, verify_family_continuation,
    FamilyDescriptor, FamilyError,
};
use crate::flowcount::{emit_continuation, recipe, FlowcountError, Metric, Tolerances};
use crate::library;
use crate::morse::circle_monodromy;
use crate::novikov::{circle_one_form, novikov_homology, CoeffLattice, Mode, NovikovError};
use crate::spectral::SpectralSequence;

pub const CHECK_NAMES: &[&str] = &[
    "e2",
    "leray-serre",
    "poincare",
    "triviality",
    "alternate",
    "mayer-vietoris",
    "monodromy",
    "novikov-units",
    "novikov-vanishing",
    "continuation",
];

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Novikov(#[from] NovikovError),
    #[error(transparent)]
    Flowcount(#[from] FlowcountError),
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub example: Option<String>,
    /// Periods of the closed 1-form for the Novikov checks.
    pub omega: Vec<i64>,
    /// Novikov truncation: terms with `ω ≤ precision` are dropped.
    pub precision: i64,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            example: None,
            omega: vec![1],
            precision: -12,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub subject: String,
    pub passed: bool,
    pub details: Value,
}

pub fn run_check(name: &str, opts: &CheckOptions) -> Result<CheckReport, CheckError> {
    let example = |default: &str| opts.example.clone().unwrap_or_else(|| default.to_string());
    let (subject, passed, details) = match name {
        "e2" => {
            let ex = example("klein");
            let r = e2_crosscheck(&descriptor(&ex)?)?;
            (
                ex,
                r.agrees(),
                json!(r
                    .first_mismatch
                    .map(|(i, j)| format!("first mismatch at ({i},{j})"))),
            )
        }
        "leray-serre" => {
            let ex = example("klein");
            let (passed, details) = leray_serre(&ex)?;
            (ex, passed, details)
        }
        "poincare" => {
            let ex = example("torus");
            let d = descriptor(&ex)?;
            let r = poincare_check(&d).map_err(|e| match e {
                FamilyError::Unsupported(m) => CheckError::Unsupported(format!("{ex}: {m}")),
                e => e.into(),
            })?;
            (
                ex,
                r.holds(),
                serde_json::to_value(&r).expect("report serializes"),
            )
        }
        "triviality" => {
            let ex = example("torus");
            let (passed, details) = triviality(&ex)?;
            (ex, passed, details)
        }
        "alternate" => {
            let ex = example("klein");
            let k = cubulation(&ex)?;
            let d = descriptor(&ex)?;
            let ck = assemble_cubical(&k).map_err(|e| CheckError::Other(e.to_string()))?;
            let r = compare_with_family(&ck, &d);
            (
                ex,
                r.is_ok(),
                json!(r
                    .err()
                    .map(|(r, i, j)| format!("page {r} differs at ({i},{j})"))),
            )
        }
        "mayer-vietoris" => {
            let ex = example("klein");
            let k = cubulation(&ex)?;
            let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
            let mv = mayer_vietoris(&k, &set(&["v0", "v1", "e0"]), &set(&["v0", "v1", "e1"]))
                .map_err(|e| CheckError::Other(e.to_string()))?;
            (
                ex,
                mv.exact(),
                serde_json::to_value(&mv).expect("report serializes"),
            )
        }
        "monodromy" => {
            let (passed, details) = monodromy(opts.seed, 10)?;
            ("random monodromy".to_string(), passed, details)
        }
        "novikov-units" => {
            let (passed, details) = novikov_units(&opts.omega, opts.precision)?;
            (format!("omega {:?}", opts.omega), passed, details)
        }
        "novikov-vanishing" => {
            let c = *opts.omega.first().ok_or_else(|| {
                CheckError::Unsupported("novikov-vanishing needs one period".into())
            })?;
            let n = circle_one_form(c);
            let p = BigRational::from_integer(opts.precision.into());
            let field = if n.lattice.is_field() {
                Some(novikov_homology(&n, Mode::Field, &p)?)
            } else {
                None
            };
            let integer = novikov_homology(&n, Mode::Integer, &p)?;
            let passed = field.as_ref().is_none_or(|h| h.vanishes()) && integer.vanishes();
            (
                format!("circle with period {c}"),
                passed,
                json!({ "field": field, "integer": integer }),
            )
        }
        "continuation" => {
            let ex = example("klein");
            let (passed, details) = continuation(&ex, opts)?;
            (ex, passed, details)
        }
        other => return Err(CheckError::UnknownCheck(other.to_string())),
    };
    Ok(CheckReport {
        check: name.to_string(),
        subject,
        passed,
        details,
    })
}

fn descriptor(name: &str) -> Result<FamilyDescriptor, CheckError> {
    library::descriptor(name).ok_or_else(|| CheckError::UnknownExample(name.to_string()))
}

fn cubulation(name: &str) -> Result<Cubulation, CheckError> {
    match name {
        "klein" => Ok(klein_cubical()),
        "torus" | "torus-trivial" => Ok(torus_cubical()),
        other if library::descriptor(other).is_some() => Err(CheckError::Unsupported(format!(
            "no cubulation is built in for `{other}`"
        ))),
        other => Err(CheckError::UnknownExample(other.to_string())),
    }
}

fn z(free: usize, tors: &[i64]) -> FgAbGroup {
    FgAbGroup::from_i64(free, tors)
}

type Groups = BTreeMap<(i64, i64), FgAbGroup>;

/// `E²` and `E^∞` of the Serre spectral sequence of the total spaces behind the built-in
/// examples, worked out by hand from the homology of base and fiber and the known total
/// space.
pub fn leray_serre_oracle(name: &str) -> Option<(Groups, Groups)> {
    let g = |xs: &[((i64, i64), FgAbGroup)]| xs.iter().cloned().collect::<Groups>();
    Some(match name {
        "torus" | "torus-trivial" | "rotating_torus" => {
            let e = g(&[
                ((0, 0), z(1, &[])),
                ((1, 0), z(1, &[])),
                ((0, 1), z(1, &[])),
                ((1, 1), z(1, &[])),
            ]);
            (e.clone(), e)
        }
        "klein" => {
            let e = g(&[
                ((0, 0), z(1, &[])),
                ((1, 0), z(1, &[])),
                ((0, 1), z(0, &[2])),
            ]);
            (e.clone(), e)
        }
        "s2_combinatorial" => {
            let e = g(&[
                ((0, 0), z(1, &[])),
                ((1, 0), z(1, &[])),
                ((0, 2), z(1, &[])),
                ((1, 2), z(1, &[])),
            ]);
            (e.clone(), e)
        }
        // S³ → S²: d₂ hits the fiber class
        "sphere_base_toy" => (
            g(&[
                ((0, 0), z(1, &[])),
                ((2, 0), z(1, &[])),
                ((0, 1), z(1, &[])),
                ((2, 1), z(1, &[])),
            ]),
            g(&[((0, 0), z(1, &[])), ((2, 1), z(1, &[]))]),
        ),
        // ℝP³ → S²: d₂ is multiplication by 2
        "sphere_base_toy2" => (
            g(&[
                ((0, 0), z(1, &[])),
                ((2, 0), z(1, &[])),
                ((0, 1), z(1, &[])),
                ((2, 1), z(1, &[])),
            ]),
            g(&[
                ((0, 0), z(1, &[])),
                ((0, 1), z(0, &[2])),
                ((2, 1), z(1, &[])),
            ]),
        ),
        _ => return None,
    })
}

fn leray_serre(name: &str) -> Result<(bool, Value), CheckError> {
    let (e2, einf) = leray_serre_oracle(name)
        .ok_or_else(|| CheckError::Unsupported(format!("no Leray-Serre table for `{name}`")))?;
    let ss = family_pages(&assemble(&descriptor(name)?)?);
    let mut mismatches = Vec::new();
    if ss.page(2).groups() != e2 {
        mismatches.push("page 2".to_string());
    }
    for r in 3..=ss.pages().len() + 1 {
        if ss.page(r).groups() != einf {
            mismatches.push(format!("page {r}"));
        }
    }
    Ok((
        mismatches.is_empty(),
        json!({ "stable_page": ss.stable_index(), "mismatches": mismatches }),
    ))
}

/// A product family collapses at `E²`, and `E²_{i,j} = H_i(B) ⊗ H_j(F)` when both are free.
fn triviality(name: &str) -> Result<(bool, Value), CheckError> {
    let d = descriptor(name)?;
    let fiber = d
        .fibers
        .values()
        .next()
        .cloned()
        .ok_or_else(|| CheckError::Other("no fibers".into()))?;
    if d != product(&d.base, d.dim_base, &fiber, d.fiber_dim) {
        return Err(CheckError::Unsupported(format!(
            "`{name}` is not a product family"
        )));
    }
    let ss = family_pages(&assemble(&d)?);
    let collapses = ss.collapses_at(2);
    let hb = crate::morse::morse_homology(&d.base).map_err(FamilyError::from)?;
    let hf = crate::morse::morse_homology(&fiber).map_err(FamilyError::from)?;
    let mut kunneth = true;
    if hb.iter().chain(&hf).all(|g| g.torsion.is_empty()) {
        let mut expect = Groups::new();
        for (i, a) in hb.iter().enumerate() {
            for (j, b) in hf.iter().enumerate() {
                if a.free_rank * b.free_rank > 0 {
                    expect.insert((i as i64, j as i64), z(a.free_rank * b.free_rank, &[]));
                }
            }
        }
        kunneth = ss.page(2).groups() == expect;
    }
    Ok((
        collapses && kunneth,
        json!({ "collapses_at_e2": collapses, "kunneth": kunneth }),
    ))
}

/// Random element of `GL_n(ℤ)`: a product of elementary matrices and sign changes.
pub fn random_unimodular(rng: &mut impl Rng, n: usize) -> IntMatrix {
    let mut m = IntMatrix::identity(n);
    for _ in 0..3 * n {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut e = IntMatrix::identity(n);
        if a == b {
            if rng.gen_bool(0.5) {
                e[(a, a)] = (-1).into();
            }
        } else {
            e[(a, b)] = rng.gen_range(-2i64..=2).into();
        }
        m = e.mul(&m);
    }
    m
}

fn monodromy(seed: u64, trials: usize) -> Result<(bool, Value), CheckError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = true;
    let mut cases = Vec::new();
    for _ in 0..trials {
        let n = rng.gen_range(1..=3);
        let j = rng.gen_range(0..=1);
        let phi = random_unimodular(&mut rng, n);
        let (coker, ker) = circle_monodromy(&phi).map_err(FamilyError::from)?;
        let ss: SpectralSequence =
            family_pages(&assemble(&library::circle_monodromy_family(&phi, j))?);
        let e2 = ss.page(2);
        let ok = e2.group(0, j as i64) == coker && e2.group(1, j as i64) == ker;
        passed &= ok;
        cases.push(json!({ "phi": phi, "j": j, "coker": coker, "ker": ker, "ok": ok }));
    }
    Ok((passed, Value::Array(cases)))
}

/// `(1 − e^A) · (1 − e^A)⁻¹ = 1` above every precision down to `precision`, for each
/// generator `A` and its negative.
fn novikov_units(omega: &[i64], precision: i64) -> Result<(bool, Value), CheckError> {
    let lat = CoeffLattice::from_i64(omega);
    let mut failures = Vec::new();
    for k in 0..lat.rank {
        for s in [1i64, -1] {
            let mut a = vec![0; lat.rank];
            a[k] = s;
            if lat.omega_of(&a) == BigRational::from_integer(0.into()) {
                continue;
            }
            let u = lat.sub(&lat.one(), &lat.int_monomial(&a, 1))?;
            for p in (precision..0).rev() {
                let p = BigRational::from_integer(p.into());
                let inv = lat.invert(&u, &p, Mode::Integer)?;
                let prod = lat.mul(&u, &inv)?;
                if !lat.agree_above(&prod, &lat.one(), &p) {
                    failures.push(format!("A = {a:?} at precision {p}"));
                }
            }
        }
    }
    Ok((failures.is_empty(), json!({ "failures": failures })))
}

fn continuation(name: &str, opts: &CheckOptions) -> Result<(bool, Value), CheckError> {
    let a = recipe(name)?;
    let b = a.with_metric(Metric::seeded(0.1, opts.seed.wrapping_add(29)));
    let (c, report) = emit_continuation(&a, &b, &opts.tolerances, opts.seed)?;
    let r = verify_family_continuation(&c)?;
    let (id, _) = emit_continuation(&a, &a, &opts.tolerances, opts.seed)?;
    let identity = id == crate::family::identity_continuation(&id.source);
    let energy = report.energy_violations().is_empty();
    Ok((
        r.equivalence() && identity && energy,
        json!({ "equivalence": r.equivalence(), "constant_family_is_identity": identity, "energy_bound_respected": energy }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_runs_on_its_default() {
        let opts = CheckOptions::default();
        for name in CHECK_NAMES {
            let r = run_check(name, &opts).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn poincare_refuses_klein() {
        let opts = CheckOptions {
            example: Some("klein".into()),
            ..Default::default()
        };
        assert!(matches!(
            run_check("poincare", &opts),
            Err(CheckError::Unsupported(_))
        ));
    }

    #[test]
    fn leray_serre_on_every_tabulated_example() {
        for ex in [
            "torus",
            "klein",
            "rotating_torus",
            "s2_combinatorial",
            "sphere_base_toy",
            "sphere_base_toy2",
        ] {
            let opts = CheckOptions {
                example: Some(ex.into()),
                ..Default::default()
            };
            assert!(run_check("leray-serre", &opts).unwrap().passed, "{ex}");
        }
    }

    #[test]
    fn vanishing_fails_for_an_exact_form() {
        let opts = CheckOptions {
            omega: vec![0],
            ..Default::default()
        };
        assert!(!run_check("novikov-vanishing", &opts).unwrap().passed);
    }
}
