//! Command-line driver. Exit codes: 0 success, 1 diagnostics or bad input,
//! 2 a statement missed its `expect` annotation, 3 an internal invariant
//! broke.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::dsl::{parse_scenario, Diagnostic};
use crate::error::Error;
use crate::interpretations::{sample_trajectories, KernelKind};
use crate::measurement::render_columns;
use crate::scenarios::{fr_suite, statement_matrix_with, Scenario, Thresholds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_EXPECTATION: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Environment variable holding the default seed of `sample`.
pub const SEED_VAR: &str = "WIGNER_LAB_SEED";

/// Largest kernel marginal error accepted before `sample` reports a breach.
const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "wigner-lab", version, about = "Run and check Wigner's-friend scenarios")]
struct Cli {
    /// Threshold for CERTAIN (|p - 1|) and POSSIBLE (p) verdicts.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Also print exact rationals in tables.
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the joint distribution of the reported variables.
    Run {
        file: PathBuf,
        #[arg(long, conflicts_with = "table")]
        json: bool,
        #[arg(long)]
        table: bool,
        /// Print the final state amplitudes.
        #[arg(long)]
        dump_state: bool,
    },
    /// Evaluate every statement and compare with its `expect` annotation.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Statement verdicts across the built-in configurations.
    Matrix {
        #[arg(long, default_value = "fr")]
        suite: String,
        /// Add the row that takes each statement from its best configuration.
        #[arg(long)]
        mixed: bool,
        #[arg(long)]
        json: bool,
    },
    /// Sample beable trajectories along the coherent run.
    Sample {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        /// Defaults to $WIGNER_LAB_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "minimal", value_parser = ["independent", "minimal"])]
        kernel: String,
        /// Write one JSON line per trajectory here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_internal() { EXIT_INTERNAL } else { EXIT_DIAGNOSTICS },
            message: format!("error: {e}"),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_DIAGNOSTICS,
            message: format!("error: {e}"),
        }
    }
}

type CliResult = Result<i32, Failure>;

fn render_all(diagnostics: &[Diagnostic], path: &Path, source: &str) -> String {
    let p = path.display().to_string();
    diagnostics
        .iter()
        .map(|d| d.render(&p, source))
        .collect::<Vec<_>>()
        .join("\n")
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let source = fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_DIAGNOSTICS,
        message: format!("error: cannot read {}: {e}", path.display()),
    })?;
    let fail = |d: Vec<Diagnostic>| Failure {
        code: EXIT_DIAGNOSTICS,
        message: render_all(&d, path, &source),
    };
    let doc = parse_scenario(&source).map_err(fail)?;
    let mut scenario = doc.lower().map_err(fail)?;
    if doc.name_option().is_none() {
        if let Some(stem) = path.file_stem() {
            scenario.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(scenario)
}

fn run(cli: &Cli, out: &mut dyn Write) -> CliResult {
    let thresholds = Thresholds::with_tolerance(cli.tolerance);
    match &cli.command {
        Command::Run {
            file,
            json,
            table: _,
            dump_state,
        } => {
            let scenario = load(file)?;
            let joint = scenario.report_joint()?;
            let state = if *dump_state {
                Some(scenario.run()?.final_state)
            } else {
                None
            };
            if *json {
                let mut v = json!({
                    "scenario": scenario.name,
                    "variables": joint.variables(),
                    "table": joint.entries(),
                });
                if let Some(s) = &state {
                    v["final_state"] = json!(s.as_ref().map(|s| s.dump()));
                }
                writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("plain data"))?;
            } else {
                writeln!(out, "# {}", scenario.name)?;
                write!(out, "{}", joint.to_table(cli.exact))?;
                match state {
                    Some(Some(s)) => write!(out, "\n# final state\n{}", s.dump())?,
                    Some(None) => writeln!(out, "\n# no single final state: collapse outcomes are not all selected")?,
                    None => {}
                }
            }
            Ok(EXIT_OK)
        }
        Command::Check { file, json } => {
            let scenario = load(file)?;
            let mut code = EXIT_OK;
            let mut rows = Vec::new();
            let mut results = Vec::new();
            for st in &scenario.statements {
                let r = scenario.evaluate_with(st, &thresholds)?;
                let status = match st.expect {
                    None => "-".to_string(),
                    Some(e) if e == r.verdict => "ok".to_string(),
                    Some(e) => {
                        code = EXIT_EXPECTATION;
                        format!("MISMATCH (expected {e})")
                    }
                };
                let p = match (&r.probability.exact, cli.exact) {
                    (Some(x), true) => format!("{:.12} ({x})", r.probability.p),
                    _ => format!("{:.12}", r.probability.p),
                };
                rows.push(vec![st.id.clone(), st.to_string(), p, r.verdict.to_string(), status.clone()]);
                let mut v = r.to_json();
                v["expect"] = json!(st.expect.map(|e| e.to_string()));
                v["matches"] = json!(st.expect.map(|e| e == r.verdict));
                results.push(v);
            }
            if *json {
                let v = json!({ "scenario": scenario.name, "statements": results });
                writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("plain data"))?;
            } else {
                writeln!(out, "# {}", scenario.name)?;
                let header: Vec<String> = ["id", "statement", "p", "verdict", "expect"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                write!(out, "{}", render_columns(&header, &rows))?;
            }
            Ok(code)
        }
        Command::Matrix { suite, mixed, json } => {
            if suite != "fr" {
                return Err(Failure {
                    code: EXIT_DIAGNOSTICS,
                    message: format!("error: unknown suite `{suite}` (available: fr)"),
                });
            }
            let m = statement_matrix_with(&fr_suite(), &thresholds, *mixed)?;
            if *json {
                writeln!(out, "{}", serde_json::to_string_pretty(&m.to_json()).expect("plain data"))?;
            } else {
                write!(out, "{}", m.to_table())?;
            }
            Ok(EXIT_OK)
        }
        Command::Sample {
            file,
            n,
            seed,
            kernel,
            log,
            json,
        } => {
            let scenario = load(file)?;
            let seed = match seed {
                Some(s) => *s,
                None => match std::env::var(SEED_VAR) {
                    Ok(v) => v.trim().parse().map_err(|_| Failure {
                        code: EXIT_DIAGNOSTICS,
                        message: format!("error: {SEED_VAR}=`{v}` is not an unsigned integer"),
                    })?,
                    Err(_) => 0,
                },
            };
            let kind = KernelKind::parse(kernel).expect("clap restricts values");
            let report = sample_trajectories(&scenario, kind, *n, seed)?;
            if let Some(path) = log {
                let f = fs::File::create(path)?;
                report.write_log(io::BufWriter::new(f))?;
            }
            if *json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.summary_json()).expect("plain data"))?;
            } else {
                writeln!(out, "# {} ({kind}, n = {n}, seed = {seed})", scenario.name)?;
                let header: Vec<String> = ["factor", "flips", "frequency", "transitions"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                let rows: Vec<Vec<String>> = report
                    .flips
                    .iter()
                    .map(|f| {
                        let t: Vec<String> = f.transitions.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                        vec![
                            f.factor.clone(),
                            f.trajectories_with_flip.to_string(),
                            format!("{:.5}", f.frequency),
                            t.join(" "),
                        ]
                    })
                    .collect();
                write!(out, "{}", render_columns(&header, &rows))?;
                writeln!(
                    out,
                    "marginals within 4/sqrt(n): {}",
                    if report.marginals_pass() { "yes" } else { "no" }
                )?;
                writeln!(out, "max kernel marginal error: {:.3e}", report.max_kernel_error())?;
            }
            if report.max_kernel_error() > KERNEL_TOL {
                return Err(Failure {
                    code: EXIT_INTERNAL,
                    message: format!(
                        "error: kernel marginal error {:.3e} exceeds {KERNEL_TOL:e}",
                        report.max_kernel_error()
                    ),
                });
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_DIAGNOSTICS } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    if !(cli.tolerance.is_finite() && cli.tolerance > 0.0) {
        let _ = writeln!(err, "error: --tolerance must be a positive number");
        return EXIT_DIAGNOSTICS;
    }
    match run(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message);
            f.code
        }
    }
}
