//! Command implementations behind the `ccg` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 solver
//! failure.

pub mod config;

use std::fs;
use std::io::Write;

use ccg_core::engine::{Cell, EngineRegistry, MAX_D};
use ccg_core::npa::{build_moment_problem, Level};
use ccg_core::report::{compute_row, write_csv, CellDocument, TableDocument, TABLE_TASKS};
use ccg_core::simulate::{analytic_value, simulate, Estimate, StrategyDocument};
use ccg_core::verify::{run_verify, VerifyOptions, VerifyReport};
use ccg_core::{CoreError, GameSpec};
use serde::Serialize;
use thiserror::Error;

use config::{DRange, Format, RunConfig};

pub const ESTIMATE_SCHEMA: &str = "ccg-estimate/1";
pub const VERIFY_SCHEMA: &str = "ccg-verify/1";

/// Default `table` range: the rows that run within the default budgets.
pub const TABLE_DEFAULT: DRange = DRange { lo: 2, hi: 8 };

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Solver { .. } | CoreError::Numeric(_) => CliError::Solver(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn emit(cfg: &RunConfig, body: &[u8]) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(body).map_err(io_err),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

pub fn cmd_table(cfg: &RunConfig) -> Result<TableDocument, CliError> {
    let registry = EngineRegistry::standard();
    let tasks: Vec<&str> = match &cfg.task {
        None => TABLE_TASKS.to_vec(),
        Some(list) => {
            let tasks: Vec<&str> = list.split(',').map(str::trim).collect();
            if let Some(bad) = tasks.iter().find(|t| !TABLE_TASKS.contains(t)) {
                return Err(CliError::Usage(format!(
                    "`{bad}` is not a table column; choose from {}",
                    TABLE_TASKS.join(", ")
                )));
            }
            tasks
        }
    };
    let ctx = cfg.engine_context();
    let mut rows = vec![];
    for d in cfg.dims(TABLE_DEFAULT)? {
        let row = compute_row(&registry, d, &tasks, &ctx)?;
        log::info!("d = {d} done, {} cell error(s)", row.errors.len());
        rows.push(row.without_strategies());
    }
    let doc = TableDocument::new(rows);
    match cfg.format {
        Format::Json => emit(cfg, &to_json(&doc)?)?,
        Format::Csv => {
            let mut buf = vec![];
            write_csv(&doc.rows, &mut buf)?;
            emit(cfg, &buf)?;
        }
    }
    Ok(doc)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Cell, CliError> {
    let registry = EngineRegistry::standard();
    let task = cfg
        .task
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("solve needs --task ({})", registry.names().collect::<Vec<_>>().join(", "))))?;
    let engine = registry.get(task)?;
    let d = cfg.single_d()?;
    let spec = GameSpec::new(d)?;
    if let Some(path) = &cfg.dump_sdp {
        let level = match task {
            "ml" => Level::One,
            "qbound" => Level::OneAB,
            _ => return Err(CliError::Usage("--dump-sdp applies to ml and qbound only".into())),
        };
        let (_, sdp) = build_moment_problem(d, level)?;
        fs::write(path, ccg_numeric::sdp::sdpa::write(&sdp)).map_err(io_err)?;
    }
    let cell = engine.compute(&spec, &cfg.engine_context())?;
    match &cell.exact {
        Some(q) => log::info!("{task} d = {d}: {q} = {:.6}", cell.value),
        None => log::info!("{task} d = {d}: {:.6} ({:?})", cell.value, cell.kind),
    }
    if let Some(path) = &cfg.export_strategy {
        let s = cell
            .strategy
            .clone()
            .ok_or_else(|| CliError::Usage(format!("`{task}` produces no strategy to export")))?;
        fs::write(path, to_json(&StrategyDocument::new(s))?).map_err(io_err)?;
    }
    match cfg.format {
        Format::Json => emit(cfg, &to_json(&CellDocument::new(cell.clone()))?)?,
        Format::Csv => {
            let kind = serde_json::to_value(cell.kind).unwrap_or_default();
            let cert = serde_json::to_value(&cell.certificate).unwrap_or_default();
            let text = format!(
                "task,d,value,exact,kind,certificate\n{},{},{:.10},{},{},{}\n",
                cell.task,
                cell.d,
                cell.value,
                cell.exact.clone().unwrap_or_default(),
                kind.as_str().unwrap_or_default(),
                cert.as_str().unwrap_or_default(),
            );
            emit(cfg, text.as_bytes())?;
        }
    }
    Ok(cell)
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateDocument {
    pub schema: String,
    pub d: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub estimate: Estimate,
    pub analytic: f64,
    pub sigmas: f64,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<EstimateDocument, CliError> {
    let path = cfg.strategy.as_ref().ok_or_else(|| CliError::Usage("simulate needs --strategy".into()))?;
    let doc = StrategyDocument::parse(&config::read(path)?)?;
    let d = doc.strategy.d();
    if !(2..=MAX_D).contains(&d) {
        return Err(CliError::Usage(format!("strategy has d = {d}")));
    }
    let estimate = simulate(&doc.strategy, cfg.rounds, cfg.seed)?;
    let analytic = analytic_value(&doc.strategy)?;
    let out = EstimateDocument {
        schema: ESTIMATE_SCHEMA.into(),
        d,
        seed: cfg.seed,
        estimate,
        analytic,
        sigmas: estimate.sigmas_from(analytic),
    };
    log::info!("{:.6} +- {:.6} over {} rounds (exact {analytic:.6})", estimate.mean, estimate.stderr, estimate.rounds);
    match cfg.format {
        Format::Json => emit(cfg, &to_json(&out)?)?,
        Format::Csv => {
            let text = format!(
                "d,rounds,mean,stderr,analytic\n{},{},{:.10},{:.10},{:.10}\n",
                d, estimate.rounds, estimate.mean, estimate.stderr, analytic
            );
            emit(cfg, text.as_bytes())?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct VerifyDocument<'a> {
    schema: &'static str,
    passed: bool,
    #[serde(flatten)]
    report: &'a VerifyReport,
}

/// Runs the invariant suite; a failing check is an error with exit code 1,
/// after the report has been written.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let opts = VerifyOptions { seed: cfg.seed, mc_rounds: cfg.rounds, ..Default::default() };
    let report = run_verify(&opts)?;
    match cfg.format {
        Format::Json => {
            let doc = VerifyDocument { schema: VERIFY_SCHEMA, passed: report.passed(), report: &report };
            emit(cfg, &to_json(&doc)?)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(vec![]);
            let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
            w.write_record(["check", "passed", "observed", "expected"]).map_err(csv_err)?;
            for c in &report.checks {
                w.write_record([c.name.as_str(), if c.passed { "true" } else { "false" }, &c.observed, &c.expected])
                    .map_err(csv_err)?;
            }
            emit(cfg, &w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)?;
        }
    }
    for c in report.failures() {
        eprintln!("FAIL {}: observed {}, expected {}", c.name, c.observed, c.expected);
    }
    let failed = report.failures().count();
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    eprintln!("all {} checks passed", report.checks.len());
    Ok(report)
}
