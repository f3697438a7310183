//! Command-line orchestration: ingest, build, solve, report.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |-----:|---------|
//! | 0 | success; `size` found an optimal solution |
//! | 1 | other failure (backend, model size, i/o) |
//! | 2 | input error (missing file, schema, invariant, session window) |
//! | 3 | a session fits no charger type within its parking window |
//! | 10 | feasible solution, optimality not proven |
//! | 20 | infeasible |
//! | 21 | unbounded |
//! | 30 | limit reached without any solution |
//! | 40 | cross-check objectives disagree |
//! | 41 | instance too large for the exhaustive solver |
//! | 50 | solution fails independent validation |

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::CatalogError;
use crate::ingest::{load_inputs, write_inputs, HubInputs, IngestError};
use crate::model::{build_problem, write_constraint_dump, write_mps, MilpProblem, ModelError, ModelOptions};
use crate::report::{compute_energy_balance, extract_solution, render_reports, ReportError};
use crate::solve::{self, relative_gap, OracleCaps, SolveError, SolveOptions, SolveOutcome, SolveStatus};
use crate::synthetic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE_SESSION: i32 = 3;
pub const EXIT_FEASIBLE: i32 = 10;
pub const EXIT_INFEASIBLE: i32 = 20;
pub const EXIT_UNBOUNDED: i32 = 21;
pub const EXIT_TIME_LIMIT: i32 = 30;
pub const EXIT_CROSSCHECK_GAP: i32 = 40;
pub const EXIT_TOO_LARGE: i32 = 41;
pub const EXIT_VALIDATION: i32 = 50;

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Relative objective tolerance of `crosscheck`.
pub const CROSSCHECK_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "ceh-size", version, about = "Co-design sizing of charging energy hubs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and check inputs, including whether every session fits a charger.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build, solve, validate and write reports.
    Size(SolveArgs),
    /// Solve with a backend and with the exhaustive solver and compare.
    Crosscheck(SolveArgs),
    /// Write the assembled problem (MPS and a constraint listing) without solving.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic instance in the input layout.
    Generate {
        #[arg(long, value_enum, default_value_t = InstanceKind::Tiny)]
        kind: InstanceKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Sessions per weekday (case-study instances).
        #[arg(long, default_value_t = 10)]
        sessions: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceKind {
    Tiny,
    CaseStudy,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for reports and the run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `highs` or `oracle`; defaults to $CEH_SIZING_BACKEND, then `highs`.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    pub gap: f64,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    pub time_limit: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<u32>,
    /// Also write the problem as `model.mps` and `constraints.txt`.
    #[arg(long)]
    pub export_model: bool,
    /// Exhaustive-solver limits as `<binaries>,<domain>`.
    #[arg(long, default_value = "22,4")]
    pub oracle_caps: OracleCaps,
}

impl SolveArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            relative_gap: self.gap,
            time_limit_s: self.time_limit,
            threads: self.threads,
            seed: self.seed,
            backend_id: self.backend.clone().unwrap_or_else(solve::default_backend_id),
            oracle_caps: self.oracle_caps,
        }
    }
}

/// Everything needed to reproduce a run, written next to the reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub options: Option<SolveOptions>,
    pub backend: Option<String>,
    pub started_at: String,
    pub finished_at: String,
    pub versions: Versions,
    pub status: Option<SolveStatus>,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub oracle_objective: Option<f64>,
    pub exit_code: i32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub ceh_sizing: &'static str,
    pub manifest: u32,
}

impl RunManifest {
    fn new(command: &str, args: &SolveArgs) -> Self {
        RunManifest {
            command: command.into(),
            config: args.config.clone(),
            output_dir: args.out.clone(),
            options: Some(args.options()),
            backend: None,
            started_at: timestamp(),
            finished_at: String::new(),
            versions: Versions { ceh_sizing: env!("CARGO_PKG_VERSION"), manifest: 1 },
            status: None,
            objective: None,
            bound: None,
            oracle_objective: None,
            exit_code: EXIT_FAILURE,
            error: None,
        }
    }

    fn record(&mut self, outcome: &SolveOutcome) {
        self.backend = Some(outcome.backend.clone());
        self.status = Some(outcome.status);
        self.objective = outcome.objective;
        self.bound = outcome.bound;
    }

    /// Writes the manifest into `dir` through a temporary file and a rename.
    pub fn write_atomic(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!(".{MANIFEST_FILE}.tmp"));
        let mut f = std::fs::File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

fn timestamp() -> String {
    chrono::DateTime::<chrono::Utc>::from(SystemTime::now()).to_rfc3339()
}

/// A failure with its exit code; `kind` is a stable machine-readable name.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Failure { code, kind, message: message.into() }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let kind = match &e {
            IngestError::Catalog(CatalogError::InfeasibleSession { .. }) => {
                return Failure::new(EXIT_INFEASIBLE_SESSION, "InfeasibleSession", e.to_string())
            }
            IngestError::MissingFile { .. } => "MissingFile",
            IngestError::Io { .. } => "Io",
            IngestError::Schema { .. } => "SchemaViolation",
            IngestError::Invariant { .. } => "InvariantViolation",
            IngestError::SessionWindow { .. } => "SessionWindowError",
            IngestError::CalendarMismatch(_) => "CalendarMismatch",
            IngestError::Catalog(_) => "ConfigError",
        };
        Failure::new(EXIT_INPUT, kind, e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InfeasibleInstance { .. } => Failure::new(EXIT_INFEASIBLE_SESSION, "InfeasibleSession", e.to_string()),
            ModelError::ModelSize { .. } => Failure::new(EXIT_FAILURE, "ModelSize", e.to_string()),
            ModelError::Catalog(_) => Failure::new(EXIT_INPUT, "ConfigError", e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let (code, kind) = match &e {
            SolveError::EnumerationTooLarge { .. } => (EXIT_TOO_LARGE, "EnumerationTooLarge"),
            SolveError::BackendUnavailable(_) => (EXIT_FAILURE, "BackendUnavailable"),
            SolveError::NumericalFailure { .. } => (EXIT_FAILURE, "NumericalFailure"),
            SolveError::Structure(_) => (EXIT_FAILURE, "Structure"),
            SolveError::Options(_) => (EXIT_INPUT, "InvalidOptions"),
        };
        Failure::new(code, kind, e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let (code, kind) = match &e {
            ReportError::Validation(_) => (EXIT_VALIDATION, "ValidationFailure"),
            ReportError::CostMismatch { .. } => (EXIT_VALIDATION, "CostMismatch"),
            ReportError::NoSolution(_) => (EXIT_FAILURE, "NoSolution"),
            ReportError::Io { .. } => (EXIT_FAILURE, "Io"),
            ReportError::Catalog(_) => (EXIT_INPUT, "ConfigError"),
        };
        Failure::new(code, kind, e.to_string())
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_FAILURE, "Io", format!("{}: {e}", path.display()))
}

pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Feasible { .. } => EXIT_FEASIBLE,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Unbounded => EXIT_UNBOUNDED,
        SolveStatus::TimeLimit => EXIT_TIME_LIMIT,
    }
}

/// Runs a parsed command and returns the process exit code. Failures are
/// reported on stderr, with a one-line JSON diagnostic on stdout.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Size(args) => with_manifest("size", &args, cmd_size),
        Command::Crosscheck(args) => with_manifest("crosscheck", &args, cmd_crosscheck),
        Command::Export { config, out } => cmd_export(&config, &out),
        Command::Generate { kind, seed, out, sessions } => cmd_generate(kind, seed, &out, sessions),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message);
            println!("{}", serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code }));
            f.code
        }
    }
}

fn with_manifest(
    name: &str,
    args: &SolveArgs,
    body: fn(&SolveArgs, &mut RunManifest) -> Result<i32, Failure>,
) -> Result<i32, Failure> {
    let mut manifest = RunManifest::new(name, args);
    let result = body(args, &mut manifest);
    manifest.finished_at = timestamp();
    match &result {
        Ok(code) => manifest.exit_code = *code,
        Err(f) => {
            manifest.exit_code = f.code;
            manifest.error = Some(format!("{}: {}", f.kind, f.message));
        }
    }
    if let Some(dir) = &args.out {
        if let Err(e) = manifest.write_atomic(dir) {
            log::error!("cannot write run manifest in {}: {e}", dir.display());
        }
    }
    result
}

pub fn cmd_validate(config: &Path) -> Result<i32, Failure> {
    let inputs = load_inputs(config)?;
    let sessions: usize = inputs.scenarios.scenarios().iter().map(|s| s.sessions.len()).sum();
    println!(
        "ok: {} scenarios x {} slots ({} h), {} days, {} sessions, {} candidate chargers",
        inputs.scenarios.scenarios().len(),
        inputs.scenarios.slots(),
        inputs.scenarios.delta_t(),
        inputs.scenarios.total_days(),
        sessions,
        inputs.catalog.candidates().len()
    );
    Ok(EXIT_OK)
}

fn build(inputs: &HubInputs) -> Result<(MilpProblem, crate::model::IndexMaps), Failure> {
    let (problem, maps) = build_problem(inputs, &ModelOptions::default())?;
    log::info!("problem: {} columns, {} rows", problem.num_columns(), problem.num_rows());
    Ok((problem, maps))
}

fn export(problem: &MilpProblem, dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    for (name, dump) in [
        ("model.mps", write_mps as fn(&MilpProblem, &mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>),
        ("constraints.txt", write_constraint_dump),
    ] {
        let path = dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        dump(problem, &mut w).and_then(|_| w.flush()).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

pub fn cmd_size(args: &SolveArgs, manifest: &mut RunManifest) -> Result<i32, Failure> {
    let inputs = load_inputs(&args.config)?;
    let (problem, maps) = build(&inputs)?;
    if args.export_model {
        let dir = args.out.as_deref().unwrap_or(Path::new("."));
        export(&problem, dir)?;
    }
    let options = args.options();
    let outcome = solve::solve(&problem, &options)?;
    manifest.record(&outcome);
    if !outcome.status.has_solution() {
        println!("status: {}", outcome.status.label());
        return Ok(status_exit_code(outcome.status));
    }
    let solution = extract_solution(&outcome, &maps, &inputs)?;
    let c = &solution.costs;
    println!("status: {}", outcome.status.label());
    println!("objective: {:.6}", solution.objective);
    println!(
        "design: pv {:?}, wt {:?}, bess {:?}, chargers {}",
        solution.design.pv_units,
        solution.design.wt_units,
        solution.design.bess_units,
        solution.design.chargers_installed.iter().map(|&q| if q { '1' } else { '0' }).collect::<String>()
    );
    println!(
        "costs: capex {:.2}, grid {:.2}, maintenance {:.2}, degradation {:.2}",
        c.capex_annualized, c.opex_grid, c.opex_maintenance, c.degradation
    );
    if let Some(dir) = &args.out {
        let balance = compute_energy_balance(&solution, &inputs.catalog, &inputs.scenarios);
        render_reports(&solution, &balance, &inputs, dir)?;
    }
    Ok(status_exit_code(outcome.status))
}

pub fn cmd_crosscheck(args: &SolveArgs, manifest: &mut RunManifest) -> Result<i32, Failure> {
    let inputs = load_inputs(&args.config)?;
    let (problem, _) = build(&inputs)?;
    let options = args.options();
    let oracle = solve::solve(&problem, &SolveOptions { backend_id: "oracle".into(), ..options.clone() })?;
    manifest.oracle_objective = oracle.objective;
    let backend = solve::solve(&problem, &options)?;
    manifest.record(&backend);
    for o in [&backend, &oracle] {
        match o.objective {
            Some(v) => println!("{}: {} objective {v:.6}", o.backend, o.status.label()),
            None => println!("{}: {}", o.backend, o.status.label()),
        }
    }
    match (backend.status, oracle.status, backend.objective, oracle.objective) {
        (SolveStatus::Optimal, SolveStatus::Optimal, Some(a), Some(b)) => {
            let gap = relative_gap(a, b);
            println!("relative gap: {gap:.3e}");
            Ok(if gap <= CROSSCHECK_TOL { EXIT_OK } else { EXIT_CROSSCHECK_GAP })
        }
        (a, b, _, _) if a == b => {
            println!("relative gap: n/a (both {})", a.label());
            Ok(EXIT_OK)
        }
        (a, b, _, _) => {
            println!("status mismatch: {} vs {}", a.label(), b.label());
            Ok(EXIT_CROSSCHECK_GAP)
        }
    }
}

pub fn cmd_export(config: &Path, out: &Path) -> Result<i32, Failure> {
    let inputs = load_inputs(config)?;
    let (problem, _) = build(&inputs)?;
    export(&problem, out)?;
    println!("{} columns, {} rows written to {}", problem.num_columns(), problem.num_rows(), out.display());
    Ok(EXIT_OK)
}

pub fn cmd_generate(kind: InstanceKind, seed: u64, out: &Path, sessions: usize) -> Result<i32, Failure> {
    let inputs = match kind {
        InstanceKind::Tiny => synthetic::tiny_instance(seed, &synthetic::TinyShape::default(), &OracleCaps::default()),
        InstanceKind::CaseStudy => synthetic::case_study_instance(seed, 2023, sessions),
    };
    let path = write_inputs(&inputs, out)?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}
