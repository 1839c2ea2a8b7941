//! Command-line surface of the dispatch optimizer.
//!
//! Exit codes: 0 success, 1 infeasible, 2 input error, 3 numerical failure.

mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use fueldispatch::baseline::{brute_force_dispatch, OracleError, TinyCase};
use fueldispatch::engine::{EngineError, Variant};
use fueldispatch::netmodel::{load_case, validate_case, NetworkCase};
use fueldispatch::report::{self, ReportError};
use fueldispatch::{compare_models, solve_dispatch, DispatchSolution, DispatchStatus, SolverConfig};

pub use manifest::RunManifest;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fueldispatch", version, about = "Fuel-minimizing multi-period dispatch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a case and write schedule, trace and summary.
    Solve(SolveArgs),
    /// Solve the proposed model and restricted variants, and tabulate fuel.
    Compare(CompareArgs),
    /// Check a case, and optionally a schedule CSV against it.
    Validate(ValidateArgs),
    /// Exhaustive grid search on a small case.
    Oracle(OracleArgs),
    /// Convert a saved solution to CSV or JSON.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct CaseArgs {
    /// Case document.
    #[arg(long)]
    case: PathBuf,
    /// Override the fuel energy density (MWh/L).
    #[arg(long)]
    alpha: Option<f64>,
    /// Accepted for interface stability; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Relative change of the fuel objective treated as converged.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Tolerance of each conic solve.
    #[arg(long = "inner-tol")]
    inner_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Model variant: proposed, A, B or C.
    #[arg(long, default_value = "proposed")]
    variant: Variant,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_delimiter = ',', default_value = "A,B,C")]
    variants: Vec<Variant>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    case: PathBuf,
    /// Schedule CSV to check against the case.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Absolute tolerance of the schedule checks.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Grid resolution in MW.
    #[arg(long)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Solution JSON written by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, value_enum)]
    format: ExportFormat,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidCase(_) | EngineError::Config(_) | EngineError::Variant { .. } => {
                CliError::Input(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Infeasible | OracleError::EqualSharing { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a, stdout),
        Command::Compare(a) => compare(a, stdout),
        Command::Validate(a) => validate(a, stdout),
        Command::Oracle(a) => oracle(a, stdout),
        Command::Export(a) => export(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}

fn read_case(args: &CaseArgs) -> Result<NetworkCase, CliError> {
    let mut case = load_case(&args.case).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(alpha) = args.alpha {
        case.system.alpha_mwh_per_liter = alpha;
    }
    Ok(case)
}

fn config(args: &SolverArgs, variant: Variant) -> SolverConfig {
    let mut c = SolverConfig {
        variant,
        ..SolverConfig::default()
    };
    if let Some(t) = args.tol {
        c.outer_tol = t;
    }
    if let Some(n) = args.max_iter {
        c.max_outer = n;
    }
    if let Some(t) = args.inner_tol {
        c.inner_tol = t;
    }
    c
}

fn overrides(case: &CaseArgs, solver: Option<&SolverArgs>) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    if let Some(a) = case.alpha {
        m.insert("alpha".into(), a.to_string());
    }
    if let Some(s) = case.seed {
        m.insert("seed".into(), s.to_string());
    }
    if let Some(s) = solver {
        if let Some(t) = s.tol {
            m.insert("tol".into(), t.to_string());
        }
        if let Some(n) = s.max_iter {
            m.insert("max_iter".into(), n.to_string());
        }
        if let Some(t) = s.inner_tol {
            m.insert("inner_tol".into(), t.to_string());
        }
    }
    m
}

fn write_file(dir: &Path, name: &str, contents: &str, artifacts: &mut Vec<String>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    artifacts.push(name.to_string());
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn status_code(status: DispatchStatus) -> u8 {
    match status {
        DispatchStatus::Converged | DispatchStatus::IterationLimit => EXIT_OK,
        DispatchStatus::Infeasible => EXIT_INFEASIBLE,
        DispatchStatus::NumericalFailure => EXIT_NUMERICAL,
    }
}

fn solve(args: SolveArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let case = read_case(&args.case)?;
    let sol: DispatchSolution = solve_dispatch(&case, &config(&args.solver, args.variant))?;
    create_dir(&args.out)?;
    let mut artifacts = Vec::new();
    if let Some(s) = &sol.schedule {
        write_file(&args.out, "schedule.csv", &report::schedule_csv(s), &mut artifacts)?;
    }
    write_file(&args.out, "trace.csv", &report::trace_csv(&sol.trace), &mut artifacts)?;
    write_file(&args.out, "summary.toml", &report::summary_toml(&sol)?, &mut artifacts)?;
    write_file(&args.out, "solution.json", &report::solution_json(&sol)?, &mut artifacts)?;
    let code = status_code(sol.status);
    let mut over = overrides(&args.case, Some(&args.solver));
    if args.variant != Variant::Full {
        over.insert("variant".into(), args.variant.to_string());
    }
    RunManifest::new("solve", Some(&args.case.case), over, &args.out, code, artifacts).write(&args.out)?;

    let _ = writeln!(stdout, "status: {}", sol.status);
    if let Some(f) = sol.fuel_liters {
        let _ = writeln!(stdout, "fuel_liters: {f:.6}");
    }
    let _ = writeln!(stdout, "outer_iterations: {}", sol.outer_iterations);
    let _ = writeln!(stdout, "max_cone_gap: {:.3e}", sol.max_cone_gap);
    let _ = writeln!(stdout, "equivalence_gap: {:.3e}", sol.equivalence_gap);
    let _ = writeln!(stdout, "output: {}", args.out.display());
    Ok(code)
}

fn compare(args: CompareArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let case = read_case(&args.case)?;
    let cmp = compare_models(&case, None, &args.variants, &config(&args.solver, Variant::Full))?;
    create_dir(&args.out)?;
    let mut artifacts = Vec::new();
    write_file(&args.out, "cumulative_fuel.csv", &report::cumulative_csv(&cmp), &mut artifacts)?;
    write_file(&args.out, "comparison.toml", &report::comparison_toml(&cmp)?, &mut artifacts)?;
    let code = cmp
        .results
        .first()
        .map_or(EXIT_NUMERICAL, |r| status_code(r.status));
    let mut over = overrides(&args.case, Some(&args.solver));
    let names: Vec<String> = args.variants.iter().map(ToString::to_string).collect();
    over.insert("variants".into(), names.join(","));
    RunManifest::new("compare", Some(&args.case.case), over, &args.out, code, artifacts).write(&args.out)?;

    for r in &cmp.results {
        let fuel = r
            .fuel_liters
            .map_or_else(|| "-".to_string(), |f| format!("{f:.3}"));
        let _ = writeln!(stdout, "{:<9} {:<17} {fuel}", r.variant, r.status.to_string());
    }
    Ok(code)
}

fn validate(args: ValidateArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let case = load_case(&args.case).map_err(|e| CliError::Input(e.to_string()))?;
    let violations = validate_case(&case);
    for v in &violations {
        let _ = writeln!(stdout, "case: {v}");
    }
    if !violations.is_empty() {
        return Err(CliError::Input(format!("{} case violation(s)", violations.len())));
    }
    let _ = writeln!(stdout, "case: ok");
    let Some(path) = &args.solution else {
        return Ok(EXIT_OK);
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let table = report::parse_schedule_csv(&text)?;
    let problems = report::check_schedule(&case, &table, args.tol);
    for v in &problems {
        let _ = writeln!(stdout, "schedule: {v}");
    }
    if !problems.is_empty() {
        return Err(CliError::Infeasible(format!("{} schedule violation(s)", problems.len())));
    }
    let _ = writeln!(stdout, "schedule: ok");
    Ok(EXIT_OK)
}

fn oracle(args: OracleArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let case = read_case(&args.case)?;
    let tiny = TinyCase::new(case)?;
    let r = brute_force_dispatch(&tiny, args.step)?;
    let csv = report::schedule_csv(&r.schedule);
    let _ = writeln!(stdout, "fuel_liters: {:.6}", r.fuel_liters);
    let _ = writeln!(stdout, "grid_points: {}", r.grid_points);
    let _ = write!(stdout, "{csv}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let mut artifacts = Vec::new();
        write_file(dir, "schedule.csv", &csv, &mut artifacts)?;
        let summary = format!(
            "fuel_liters = {:.6}\ngrid_points = {}\nstep_mw = {}\n",
            r.fuel_liters, r.grid_points, args.step
        );
        write_file(dir, "oracle.toml", &summary, &mut artifacts)?;
        let mut over = overrides(&args.case, None);
        over.insert("step".into(), args.step.to_string());
        RunManifest::new("oracle", Some(&args.case.case), over, dir, EXIT_OK, artifacts).write(dir)?;
    }
    Ok(EXIT_OK)
}

fn export(args: ExportArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let text = fs::read_to_string(&args.solution).map_err(|source| CliError::Io {
        path: args.solution.display().to_string(),
        source,
    })?;
    let sol: DispatchSolution = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.solution.display())))?;
    let schedule = sol
        .schedule
        .as_ref()
        .ok_or_else(|| CliError::Infeasible(format!("solution has no schedule (status {})", sol.status)))?;
    let body = match args.format {
        ExportFormat::Csv => report::schedule_csv(schedule),
        ExportFormat::Json => {
            let mut s = serde_json::to_string_pretty(schedule).map_err(|e| CliError::Input(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match &args.out {
        Some(path) => fs::write(path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => {
            let _ = stdout.write_all(body.as_bytes());
        }
    }
    Ok(EXIT_OK)
}
