//! Value engines behind one trait, looked up by task name.

use std::collections::BTreeMap;
use std::time::Instant;

use ccg_numeric::SolverOptions;
use serde::{Deserialize, Serialize};

use crate::classical::{classical_optimum, ClassicalOptions, EXHAUSTIVE_MAX_D};
use crate::error::{CoreError, Result};
use crate::game::{rational_to_f64, GameSpec};
use crate::npa::{upper_bound, Level, ONE_AB_MAX_D};
use crate::seesaw::{run_bell, run_pm, run_pm_frozen, SeesawOptions, SeesawOutcome};
use crate::simulate::StrategyFile;

/// Largest d any optimizer accepts.
pub const MAX_D: usize = 11;
/// Largest d the see-saw engines run without the heavy flag.
pub const SEESAW_MAX_D: usize = 8;
/// Random restarts for the Bell see-saw; the canonical warm start is
/// usually already optimal.
pub const BELL_RESTARTS: usize = 4;

#[derive(Debug, Clone)]
pub struct EngineContext {
    /// `None` picks the engine's default.
    pub restarts: Option<usize>,
    pub seed: u64,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub sdp_tol: f64,
    pub allow_heavy: bool,
}

impl Default for EngineContext {
    fn default() -> Self {
        Self {
            restarts: None,
            seed: 0,
            max_iters: 200,
            conv_tol: 1e-8,
            sdp_tol: 1e-10,
            allow_heavy: false,
        }
    }
}

impl EngineContext {
    fn seesaw(&self, default_restarts: usize) -> SeesawOptions {
        SeesawOptions {
            restarts: self.restarts.unwrap_or(default_restarts),
            seed: self.seed,
            max_iters: self.max_iters,
            conv_tol: self.conv_tol,
            warm_starts: true,
            sdp: SolverOptions::with_tol(self.sdp_tol),
        }
    }
}

/// Direction of a reported number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    ExhaustiveSearch,
    ExplicitStrategy,
    DualCertificate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub converged_restarts: Option<usize>,
    pub failed_restarts: Option<usize>,
    pub best_restart: Option<usize>,
    pub solver_status: Option<String>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub searched: Option<u64>,
    pub ties: Option<u64>,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub task: String,
    pub d: usize,
    pub value: f64,
    /// Exact rational, when known.
    pub exact: Option<String>,
    pub kind: BoundKind,
    pub certificate: Certificate,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyFile>,
}

pub trait ValueEngine: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn compute(&self, spec: &GameSpec, ctx: &EngineContext) -> Result<Cell>;
}

fn check_range(spec: &GameSpec) -> Result<()> {
    if spec.d() > MAX_D {
        return Err(CoreError::SearchSpaceTooLarge {
            d: spec.d(),
            reason: format!("optimizers accept d <= {MAX_D}"),
        });
    }
    Ok(())
}

fn check_seesaw(spec: &GameSpec, ctx: &EngineContext) -> Result<()> {
    check_range(spec)?;
    if spec.d() > SEESAW_MAX_D && !ctx.allow_heavy {
        return Err(CoreError::SearchSpaceTooLarge {
            d: spec.d(),
            reason: "long-running see-saw; enable allow_heavy".into(),
        });
    }
    Ok(())
}

fn seesaw_provenance<S>(out: &SeesawOutcome<S>, opts: &SeesawOptions) -> Provenance {
    Provenance {
        seed: Some(opts.seed),
        restarts: Some(out.traces.len()),
        converged_restarts: Some(out.converged_restarts()),
        failed_restarts: Some(out.failed_restarts()),
        best_restart: Some(out.best_restart),
        ..Default::default()
    }
}

pub struct ClassicalEngine;

impl ValueEngine for ClassicalEngine {
    fn name(&self) -> &'static str {
        "classical"
    }

    fn description(&self) -> &'static str {
        "exact classical value by exhaustive search over message functions"
    }

    fn compute(&self, spec: &GameSpec, ctx: &EngineContext) -> Result<Cell> {
        let t = Instant::now();
        let opts = ClassicalOptions {
            prune_symmetry: spec.d() > 3,
            allow_heavy: ctx.allow_heavy,
        };
        let sol = classical_optimum(spec, opts)?;
        let mut notes = vec![];
        if sol.pruned {
            notes.push("searched with m(0,0) = 0 fixed; ties counted within that slice".into());
        }
        let strategy = StrategyFile::Classical {
            d: spec.d(),
            message: sol.message.table.clone(),
            response: sol.response.table.clone(),
        };
        Ok(Cell {
            task: self.name().into(),
            d: spec.d(),
            value: rational_to_f64(&sol.value),
            exact: Some(sol.value.to_string()),
            kind: BoundKind::Exact,
            certificate: Certificate::ExhaustiveSearch,
            provenance: Provenance {
                searched: Some(sol.searched),
                ties: Some(sol.ties),
                wall_time_s: t.elapsed().as_secs_f64(),
                notes,
                ..Default::default()
            },
            strategy: Some(strategy),
        })
    }
}

pub struct TqsEngine;

impl ValueEngine for TqsEngine {
    fn name(&self) -> &'static str {
        "tqs"
    }

    fn description(&self) -> &'static str {
        "prepare-and-measure lower bound by see-saw"
    }

    fn compute(&self, spec: &GameSpec, ctx: &EngineContext) -> Result<Cell> {
        check_seesaw(spec, ctx)?;
        let t = Instant::now();
        let opts = ctx.seesaw(if spec.d() <= SEESAW_MAX_D { 20 } else { 100 });
        let out = run_pm(spec, &opts)?;
        let mut provenance = seesaw_provenance(&out, &opts);
        provenance.wall_time_s = t.elapsed().as_secs_f64();
        Ok(Cell {
            task: self.name().into(),
            d: spec.d(),
            value: out.value,
            exact: None,
            kind: BoundKind::Lower,
            certificate: Certificate::ExplicitStrategy,
            provenance,
            strategy: Some(StrategyFile::PrepareMeasure((&out.strategy).into())),
        })
    }
}

pub struct FrozenTqsEngine;

impl ValueEngine for FrozenTqsEngine {
    fn name(&self) -> &'static str {
        "tqs-frozen"
    }

    fn description(&self) -> &'static str {
        "prepare-and-measure value with measurements fixed to the Fourier-type bases"
    }

    fn compute(&self, spec: &GameSpec, _ctx: &EngineContext) -> Result<Cell> {
        check_range(spec)?;
        let t = Instant::now();
        let (value, strat) = run_pm_frozen(spec);
        Ok(Cell {
            task: self.name().into(),
            d: spec.d(),
            value,
            exact: None,
            kind: BoundKind::Lower,
            certificate: Certificate::ExplicitStrategy,
            provenance: Provenance {
                wall_time_s: t.elapsed().as_secs_f64(),
                ..Default::default()
            },
            strategy: Some(StrategyFile::PrepareMeasure((&strat).into())),
        })
    }
}

pub struct EaccEngine;

impl ValueEngine for EaccEngine {
    fn name(&self) -> &'static str {
        "eacc"
    }

    fn description(&self) -> &'static str {
        "entanglement-assisted lower bound (maximal Bell violation) by see-saw"
    }

    fn compute(&self, spec: &GameSpec, ctx: &EngineContext) -> Result<Cell> {
        check_seesaw(spec, ctx)?;
        let t = Instant::now();
        let opts = ctx.seesaw(BELL_RESTARTS);
        let out = run_bell(spec, &opts)?;
        let mut provenance = seesaw_provenance(&out, &opts);
        provenance.wall_time_s = t.elapsed().as_secs_f64();
        Ok(Cell {
            task: self.name().into(),
            d: spec.d(),
            value: out.value,
            exact: None,
            kind: BoundKind::Lower,
            certificate: Certificate::ExplicitStrategy,
            provenance,
            strategy: Some(StrategyFile::Entangled((&out.strategy).into())),
        })
    }
}

/// Moment-relaxation upper bound at a fixed level.
pub struct NpaEngine {
    pub level: Level,
}

impl ValueEngine for NpaEngine {
    fn name(&self) -> &'static str {
        match self.level {
            Level::One => "ml",
            Level::OneAB => "qbound",
        }
    }

    fn description(&self) -> &'static str {
        match self.level {
            Level::One => "level-1 moment relaxation (Macroscopic Locality value)",
            Level::OneAB => "level-1+AB moment relaxation (quantum upper bound)",
        }
    }

    fn compute(&self, spec: &GameSpec, ctx: &EngineContext) -> Result<Cell> {
        check_range(spec)?;
        let d = spec.d();
        if self.level == Level::OneAB && d > ONE_AB_MAX_D && !ctx.allow_heavy {
            return Err(CoreError::SearchSpaceTooLarge {
                d,
                reason: "level-1+AB relaxation is long-running; enable allow_heavy".into(),
            });
        }
        let t = Instant::now();
        let rep = upper_bound(d, self.level, &SolverOptions::default())?;
        Ok(Cell {
            task: self.name().into(),
            d,
            value: rep.value,
            exact: None,
            kind: BoundKind::Upper,
            certificate: Certificate::DualCertificate,
            provenance: Provenance {
                solver_status: Some(rep.status_name.clone()),
                primal_residual: Some(rep.primal_residual),
                dual_residual: Some(rep.dual_residual),
                wall_time_s: t.elapsed().as_secs_f64(),
                notes: vec![format!(
                    "rigorous bound {:.10} (value plus residual correction); {} moments, {}x{} matrix",
                    rep.rigorous, rep.num_variables, rep.psd_size, rep.psd_size
                )],
                ..Default::default()
            },
            strategy: None,
        })
    }
}

pub struct EngineRegistry {
    engines: BTreeMap<&'static str, Box<dyn ValueEngine>>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        Self { engines: BTreeMap::new() }
    }

    /// Every built-in engine.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ClassicalEngine));
        r.register(Box::new(TqsEngine));
        r.register(Box::new(FrozenTqsEngine));
        r.register(Box::new(EaccEngine));
        r.register(Box::new(NpaEngine { level: Level::One }));
        r.register(Box::new(NpaEngine { level: Level::OneAB }));
        r
    }

    /// Later registrations replace earlier ones of the same name.
    pub fn register(&mut self, engine: Box<dyn ValueEngine>) {
        self.engines.insert(engine.name(), engine);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ValueEngine> {
        self.engines
            .get(name)
            .map(|e| e.as_ref())
            .ok_or_else(|| CoreError::UnknownEngine(name.into()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.engines.keys().copied()
    }

    pub fn run(&self, name: &str, spec: &GameSpec, ctx: &EngineContext) -> Result<Cell> {
        let engine = self.get(name)?;
        log::info!("running {name} for d = {}", spec.d());
        engine.compute(spec, ctx)
    }
}

/// Exhaustive classical search runs by default up to this d.
pub const CLASSICAL_DEFAULT_MAX_D: usize = EXHAUSTIVE_MAX_D;
