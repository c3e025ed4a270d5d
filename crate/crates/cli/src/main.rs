mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use morsefam::checks::{run_check, CheckError, CheckOptions, CHECK_NAMES};
use morsefam::cubical::{assemble_cubical, CubicalError};
use morsefam::family::{assemble, family_homology, family_pages, FamilyError};
use morsefam::flowcount::{
    emit_cubical, emit_descriptor, recipe, regularity_check, FlowcountError, Tolerances,
};
use morsefam::morse::{morse_homology, MorseError};
use morsefam::novikov::{novikov_homology, Mode};
use morsefam::spectral::{homology_graded, PageTable, SpectralSequence};
use morsefam::{FgAbGroup, FilteredComplex};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::io::{pages_csv, read_input, render, Payload};

const EXIT_FAIL: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_NOT_A_COMPLEX: u8 = 3;
const EXIT_UNSTABLE: u8 = 4;
const EXIT_UNSUPPORTED: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "morsefam",
    version,
    about = "Morse homology of families: pages, checks and flow-line counting"
)]
struct Cli {
    /// Print progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Seed recorded in every output; drives all randomized steps.
    #[arg(long, global = true, env = "MORSEFAM_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Homology, spectral sequence pages and the filtration of a family.
    Compute {
        /// Built-in example (see `examples`).
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        example: Option<String>,
        /// Input document (`"schema": "morsefam/1"`).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Include every page from E² to the stable page, not just E² and E^∞.
        #[arg(long)]
        pages: bool,
        /// Novikov truncation: terms with ω at or below this value are dropped.
        #[arg(long, default_value_t = -12, allow_negative_numbers = true)]
        precision: i64,
    },
    /// Run named consistency checks (`all` runs every check on its default example).
    Check {
        #[arg(required = true)]
        names: Vec<String>,
        #[arg(long)]
        example: Option<String>,
        /// Periods of the closed 1-form for the Novikov checks.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1",
            allow_negative_numbers = true
        )]
        omega: Vec<i64>,
        #[arg(long, default_value_t = -12, allow_negative_numbers = true)]
        precision: i64,
        #[arg(long)]
        shoot_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count flow lines numerically and emit an integer descriptor.
    Flowcount {
        #[arg(long)]
        bundle: String,
        /// Where to write the emitted document (stdout otherwise).
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long)]
        shoot_tol: Option<f64>,
        /// Emit cubical data over the two-vertex circle instead of a family descriptor.
        #[arg(long)]
        cubical: bool,
        /// Also run the regularity check with this many perturbations of size 1e-3.
        #[arg(long)]
        regularity: Option<usize>,
    },
    /// List built-in examples, bundle recipes and checks.
    Examples,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

fn family_code(e: &FamilyError) -> u8 {
    match e {
        FamilyError::NotAComplex { .. } | FamilyError::Morse(MorseError::NotAComplex { .. }) => {
            EXIT_NOT_A_COMPLEX
        }
        FamilyError::Unsupported(_) => EXIT_UNSUPPORTED,
        _ => EXIT_SCHEMA,
    }
}

fn flowcount_code(e: &FlowcountError) -> u8 {
    match e {
        FlowcountError::Unsupported(_) | FlowcountError::ChartIncompatible(_) => EXIT_UNSUPPORTED,
        FlowcountError::Family(f) => match family_code(f) {
            EXIT_NOT_A_COMPLEX => EXIT_NOT_A_COMPLEX,
            _ => EXIT_UNSTABLE,
        },
        _ => EXIT_UNSTABLE,
    }
}

impl From<FamilyError> for Failure {
    fn from(e: FamilyError) -> Self {
        Failure::new(family_code(&e), e)
    }
}

impl From<FlowcountError> for Failure {
    fn from(e: FlowcountError) -> Self {
        Failure::new(flowcount_code(&e), e)
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        let code = match &e {
            CheckError::Unsupported(_) => EXIT_UNSUPPORTED,
            CheckError::UnknownCheck(_) | CheckError::UnknownExample(_) => EXIT_SCHEMA,
            CheckError::Family(f) => family_code(f),
            CheckError::Flowcount(f) => flowcount_code(f),
            _ => EXIT_FAIL,
        };
        Failure::new(code, e)
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::new(EXIT_FAIL, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn graded_list(graded: &std::collections::BTreeMap<(i64, i64), FgAbGroup>) -> Value {
    graded
        .iter()
        .filter(|(_, g)| !g.is_trivial())
        .map(|(&(i, j), g)| json!({ "i": i, "j": j, "group": g }))
        .collect()
}

/// Homology, filtration and pages of a filtered complex.
fn filtered_body(
    kind: &str,
    f: &FilteredComplex,
    all_pages: bool,
) -> (Value, Vec<(String, PageTable)>) {
    let ss = SpectralSequence::compute(f);
    let stable = ss.stable_index().max(2);
    let tables: Vec<_> = if all_pages {
        (2..=stable).map(|r| ss.page(r).to_table()).collect()
    } else {
        vec![ss.page(2).to_table()]
    };
    let homology = f.complex().homology();
    let body = json!({
        "kind": kind,
        "homology": homology,
        "filtration": graded_list(&homology_graded(f)),
        "collapses_at_e2": ss.collapses_at(2),
        "stable_page": stable,
        "pages": tables,
        "e_infinity": ss.infinity().to_table(),
    });
    let mut csv: Vec<(String, PageTable)> =
        tables.into_iter().map(|t| (t.r.to_string(), t)).collect();
    csv.push(("inf".to_string(), ss.infinity().to_table()));
    (body, csv)
}

fn compute(
    cli: &Cli,
    example: Option<&String>,
    input: Option<&PathBuf>,
    out: Option<&PathBuf>,
    format: Format,
    pages: bool,
    precision: i64,
) -> Result<(), Failure> {
    let payload = match (example, input) {
        (Some(name), _) => {
            Payload::Family(morsefam::library::descriptor(name).ok_or_else(|| {
                Failure::new(
                    EXIT_SCHEMA,
                    format!("unknown example `{name}` (see `morsefam examples`)"),
                )
            })?)
        }
        (None, Some(path)) => read_input(path).map_err(|e| Failure::new(EXIT_SCHEMA, e))?,
        (None, None) => unreachable!("clap requires one of --example and --input"),
    };
    let config = json!({
        "command": "compute",
        "example": example,
        "input": input.map(|p| p.display().to_string()),
        "pages": pages,
        "precision": precision,
        "seed": cli.seed,
    });
    if cli.verbose {
        eprintln!(
            "computing {}",
            example.cloned().unwrap_or_else(|| "input".into())
        );
    }
    let (body, csv) = match payload {
        Payload::Family(d) => {
            let fc = assemble(&d)?;
            let (mut body, csv) = filtered_body("family", &fc.filtered, pages);
            debug_assert_eq!(family_homology(&fc).groups, fc.complex().homology());
            body["e2_equals_e_infinity"] = json!(family_pages(&fc).collapses_at(2));
            (body, Some(csv))
        }
        Payload::Cubical(k) => {
            let ck = assemble_cubical(&k).map_err(|e| match e {
                CubicalError::Family(f) => Failure::from(f),
                e => Failure::new(EXIT_SCHEMA, e),
            })?;
            let (body, csv) = filtered_body("cubical", &ck.filtered, pages);
            (body, Some(csv))
        }
        Payload::Morse(m) => {
            let h = morse_homology(&m).map_err(|e| Failure::from(FamilyError::from(e)))?;
            (json!({ "kind": "morse", "homology": h }), None)
        }
        Payload::Novikov(n) => {
            let mode = if n.lattice.is_field() {
                Mode::Field
            } else {
                Mode::Integer
            };
            let h = novikov_homology(&n, mode, &BigRational::from_integer(precision.into()))
                .map_err(|e| {
                    let code = if matches!(e, morsefam::novikov::NovikovError::NotAComplex { .. }) {
                        EXIT_NOT_A_COMPLEX
                    } else {
                        EXIT_SCHEMA
                    };
                    Failure::new(code, e)
                })?;
            (
                json!({ "kind": "novikov", "homology": h, "vanishes": h.vanishes() }),
                None,
            )
        }
    };
    let text = match format {
        Format::Json => render(&config, body),
        Format::Csv => match csv {
            Some(tables) => pages_csv(&tables),
            None => {
                return Err(Failure::new(
                    EXIT_UNSUPPORTED,
                    "csv export needs a filtered input (family or cubical)",
                ))
            }
        },
    };
    write_out(out, &text)
}

fn tolerances(shoot_tol: Option<f64>) -> Tolerances {
    let mut t = Tolerances::default();
    if let Some(s) = shoot_tol {
        t.shoot_tol = s;
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn check(
    cli: &Cli,
    names: &[String],
    example: Option<&String>,
    omega: &[i64],
    precision: i64,
    shoot_tol: Option<f64>,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let opts = CheckOptions {
        example: example.cloned(),
        omega: omega.to_vec(),
        precision,
        seed: cli.seed,
        tolerances: tolerances(shoot_tol),
    };
    let names: Vec<String> = if names.iter().any(|n| n == "all") {
        CHECK_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    let mut reports = Vec::new();
    for name in &names {
        if cli.verbose {
            eprintln!("check {name}");
        }
        let r = run_check(name, &opts)?;
        eprintln!(
            "{} {} ({})",
            if r.passed { "PASS" } else { "FAIL" },
            r.check,
            r.subject
        );
        reports.push(r);
    }
    let config = json!({
        "command": "check",
        "checks": names,
        "example": example,
        "omega": omega,
        "precision": precision,
        "seed": cli.seed,
        "tolerances": opts.tolerances,
    });
    let all = reports.iter().all(|r| r.passed);
    write_out(
        out,
        &render(&config, json!({ "passed": all, "reports": reports })),
    )?;
    if all {
        Ok(())
    } else {
        Err(Failure::new(EXIT_FAIL, "some checks failed"))
    }
}

fn flowcount(
    cli: &Cli,
    bundle: &str,
    emit: Option<&PathBuf>,
    shoot_tol: Option<f64>,
    cubical: bool,
    regularity: Option<usize>,
) -> Result<(), Failure> {
    let z = recipe(bundle)?;
    let tol = tolerances(shoot_tol);
    if cli.verbose {
        eprintln!("counting flow lines on {bundle} (seed {})", cli.seed);
    }
    let mut body = if cubical {
        let (k, report) = emit_cubical(&z, &tol, cli.seed)?;
        json!({ "cubical": k, "report": report })
    } else {
        let (d, report) = emit_descriptor(&z, &tol, cli.seed)?;
        let fc = assemble(&d)?;
        let energy_ok = report.energy_violations().is_empty();
        json!({
            "family": d,
            "report": { "flow_lines": report.records, "energy_bound_respected": energy_ok, "homology": fc.complex().homology() },
        })
    };
    let mut stable = true;
    if let Some(trials) = regularity {
        let r = regularity_check(&z, &tol, cli.seed, 1e-3, trials)?;
        stable = r.stable();
        body["report"]["regularity"] = serde_json::to_value(&r).expect("report serializes");
    }
    let config = json!({
        "command": "flowcount",
        "bundle": bundle,
        "cubical": cubical,
        "seed": cli.seed,
        "tolerances": tol,
    });
    write_out(emit, &render(&config, body))?;
    if stable {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_UNSTABLE,
            "counts are not stable under perturbation",
        ))
    }
}

fn examples() {
    println!("examples (compute --example, check --example):");
    for n in morsefam::library::DESCRIPTOR_NAMES {
        println!("  {n}");
    }
    println!("bundles (flowcount --bundle):");
    for n in morsefam::flowcount::RECIPES {
        let note = match recipe(n) {
            Ok(_) => "",
            Err(_) => "  (combinatorial only)",
        };
        println!("  {n}{note}");
    }
    println!("checks:");
    for n in CHECK_NAMES {
        println!("  {n}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compute {
            example,
            input,
            out,
            format,
            pages,
            precision,
        } => compute(
            &cli,
            example.as_ref(),
            input.as_ref(),
            out.as_ref(),
            *format,
            *pages,
            *precision,
        ),
        Command::Check {
            names,
            example,
            omega,
            precision,
            shoot_tol,
            out,
        } => check(
            &cli,
            names,
            example.as_ref(),
            omega,
            *precision,
            *shoot_tol,
            out.as_ref(),
        ),
        Command::Flowcount {
            bundle,
            emit,
            shoot_tol,
            cubical,
            regularity,
        } => flowcount(
            &cli,
            bundle,
            emit.as_ref(),
            *shoot_tol,
            *cubical,
            *regularity,
        ),
        Command::Examples => {
            examples();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
