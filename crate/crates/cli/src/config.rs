//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file. Keys are the long flag names without dashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Inclusive range of dimensions, written `2..8` or `2-8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DRange {
    pub lo: usize,
    pub hi: usize,
}

impl DRange {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for DRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .or_else(|| s.split_once('-'))
            .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
        let lo: usize = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let hi: usize = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        Ok(Self { lo, hi })
    }
}

/// Flags shared by every subcommand. All optional so that a config file can
/// supply them.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Game dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Inclusive dimension range, e.g. `2..8`.
    #[arg(long, value_name = "LO..HI")]
    pub d_range: Option<DRange>,
    /// Engine name (`solve`) or comma-separated engine list (`table`).
    #[arg(long)]
    pub task: Option<String>,
    /// Random see-saw restarts on top of the warm starts.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// See-saw iteration cap per restart.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// See-saw convergence threshold on the objective change.
    #[arg(long)]
    pub conv_tol: Option<f64>,
    /// Duality-gap tolerance for the see-saw SDPs.
    #[arg(long)]
    pub sdp_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lift the runtime gates (d = 6 classical search, d >= 9 see-saw,
    /// 1+AB above d = 5).
    #[arg(long)]
    pub allow_heavy: bool,
    /// Strategy file for `simulate`.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// Monte Carlo rounds for `simulate`.
    #[arg(long)]
    pub rounds: Option<u64>,
    /// `solve`: also write the optimal strategy here.
    #[arg(long)]
    pub export_strategy: Option<PathBuf>,
    /// `solve` with ml/qbound: also write the SDP in sparse SDPA format here.
    #[arg(long)]
    pub dump_sdp: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "d",
    "d-range",
    "task",
    "restarts",
    "seed",
    "max-iters",
    "conv-tol",
    "sdp-tol",
    "format",
    "out",
    "allow-heavy",
    "strategy",
    "rounds",
    "export-strategy",
    "dump-sdp",
    "config",
];

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: Option<usize>,
    pub d_range: Option<DRange>,
    pub task: Option<String>,
    pub restarts: Option<usize>,
    pub seed: u64,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub sdp_tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub allow_heavy: bool,
    pub strategy: Option<PathBuf>,
    pub rounds: u64,
    pub export_strategy: Option<PathBuf>,
    pub dump_sdp: Option<PathBuf>,
}

pub const DEFAULT_ROUNDS: u64 = 1_000_000;

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if key == "config" || !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{}`", n + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config `{key}`: {e}"))))
        .transpose()
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => from_file(file, key),
    }
}

impl RunConfig {
    /// Layers `args` over the config file they name, if any.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => parse_config_file(&read(p)?)?,
            None => BTreeMap::new(),
        };
        Self::merge(args, &file)
    }

    pub fn merge(a: &CommonArgs, file: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let allow_heavy = a.allow_heavy || from_file::<bool>(file, "allow-heavy")?.unwrap_or(false);
        let cfg = Self {
            d: pick(a.d, file, "d")?,
            d_range: pick(a.d_range, file, "d-range")?,
            task: pick(a.task.clone(), file, "task")?,
            restarts: pick(a.restarts, file, "restarts")?,
            seed: pick(a.seed, file, "seed")?.unwrap_or(0),
            max_iters: pick(a.max_iters, file, "max-iters")?.unwrap_or(200),
            conv_tol: pick(a.conv_tol, file, "conv-tol")?.unwrap_or(1e-8),
            sdp_tol: pick(a.sdp_tol, file, "sdp-tol")?.unwrap_or(1e-10),
            format: pick(a.format, file, "format")?.unwrap_or(Format::Json),
            out: pick(a.out.clone(), file, "out")?,
            allow_heavy,
            strategy: pick(a.strategy.clone(), file, "strategy")?,
            rounds: pick(a.rounds, file, "rounds")?.unwrap_or(DEFAULT_ROUNDS),
            export_strategy: pick(a.export_strategy.clone(), file, "export-strategy")?,
            dump_sdp: pick(a.dump_sdp.clone(), file, "dump-sdp")?,
        };
        if cfg.d.is_some() && cfg.d_range.is_some() {
            return Err(CliError::Usage("give either d or d-range, not both".into()));
        }
        if !(cfg.conv_tol > 0.0 && cfg.sdp_tol > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        if cfg.max_iters == 0 {
            return Err(CliError::Usage("max-iters must be positive".into()));
        }
        Ok(cfg)
    }

    /// Dimensions to run: `d`, else `d-range`, else `default`.
    pub fn dims(&self, default: DRange) -> Result<Vec<usize>, CliError> {
        let r = match (self.d, self.d_range) {
            (Some(d), _) => DRange { lo: d, hi: d },
            (None, Some(r)) => r,
            (None, None) => default,
        };
        if r.lo < 2 || r.hi > ccg_core::engine::MAX_D {
            return Err(CliError::Usage(format!(
                "d must lie in 2..={}, got {}..{}",
                ccg_core::engine::MAX_D,
                r.lo,
                r.hi
            )));
        }
        Ok(r.iter().collect())
    }

    pub fn single_d(&self) -> Result<usize, CliError> {
        match (self.d, self.d_range) {
            (Some(d), _) => Ok(self.dims(DRange { lo: d, hi: d })?[0]),
            (None, Some(r)) if r.lo == r.hi => Ok(self.dims(r)?[0]),
            _ => Err(CliError::Usage("this command needs a single --d".into())),
        }
    }

    pub fn engine_context(&self) -> ccg_core::EngineContext {
        ccg_core::EngineContext {
            restarts: self.restarts,
            seed: self.seed,
            max_iters: self.max_iters,
            conv_tol: self.conv_tol,
            sdp_tol: self.sdp_tol,
            allow_heavy: self.allow_heavy,
        }
    }
}

pub fn read(p: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}
