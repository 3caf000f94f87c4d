//! Alternating-optimization ("see-saw") lower bounds.
//!
//! Each half-step maximizes the objective exactly over one block of
//! variables with the others fixed, so the recorded objective sequence is
//! non-decreasing up to solver tolerance. Restarts run in parallel with seed
//! `seed + restart`; the merge picks the largest value and, among equal
//! values, the lowest restart index.

pub mod bell;
pub mod pm;

use ccg_numeric::SolverOptions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub use bell::{
    behavior_of, bell_operator, canonical_bases, party_scores, run_bell, update_party,
    update_state, BellOperator, EntangledStrategy, EntangledStrategyData, Party,
};
pub use pm::{
    collapsed_objective, evaluate_pm, measurement_scores, run_pm, run_pm_frozen,
    score_operators, update_measurements, update_states, PmStrategyData, PrepareMeasureStrategy,
};

#[derive(Debug, Clone)]
pub struct SeesawOptions {
    /// Random restarts, in addition to the warm starts.
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub warm_starts: bool,
    pub sdp: SolverOptions,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0,
            max_iters: 200,
            conv_tol: 1e-8,
            warm_starts: true,
            sdp: SolverOptions::with_tol(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Computational-basis embedding of the linear classical strategy.
    Classical,
    /// Fourier-type bases.
    Canonical,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawTrace {
    pub restart: usize,
    pub seed: u64,
    pub start: StartKind,
    /// Objective at the start and after every half-step.
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

impl SeesawTrace {
    fn new(restart: usize, seed: u64, start: StartKind) -> Self {
        Self {
            restart,
            seed,
            start,
            objectives: Vec::new(),
            iterations: 0,
            converged: false,
            error: None,
        }
    }

    pub fn final_value(&self) -> Option<f64> {
        self.objectives.last().copied()
    }

    /// Largest drop between consecutive recorded objectives (0 if monotone).
    pub fn max_decrease(&self) -> f64 {
        self.objectives
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SeesawOutcome<S> {
    pub value: f64,
    pub strategy: S,
    pub best_restart: usize,
    pub traces: Vec<SeesawTrace>,
}

impl<S> SeesawOutcome<S> {
    pub fn converged_restarts(&self) -> usize {
        self.traces.iter().filter(|t| t.converged).count()
    }

    pub fn failed_restarts(&self) -> usize {
        self.traces.iter().filter(|t| t.error.is_some()).count()
    }
}

/// Start plan: warm starts first, then random restarts.
fn start_plan(opts: &SeesawOptions, warm: &[StartKind]) -> Vec<(usize, u64, StartKind)> {
    let mut kinds: Vec<StartKind> = if opts.warm_starts { warm.to_vec() } else { vec![] };
    kinds.extend(std::iter::repeat_n(StartKind::Random, opts.restarts));
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, k)| (i, opts.seed.wrapping_add(i as u64), k))
        .collect()
}

/// Runs every start in parallel and merges deterministically.
fn run_restarts<S, F>(opts: &SeesawOptions, warm: &[StartKind], run: F) -> Result<SeesawOutcome<S>>
where
    S: Send,
    F: Fn(&mut SeesawTrace) -> Result<(f64, S)> + Sync,
{
    let plan = start_plan(opts, warm);
    if plan.is_empty() {
        return Err(CoreError::InvalidStrategy("no restarts requested".into()));
    }
    let results: Vec<(SeesawTrace, Option<(f64, S)>)> = plan
        .into_par_iter()
        .map(|(i, seed, kind)| {
            let mut trace = SeesawTrace::new(i, seed, kind);
            match run(&mut trace) {
                Ok(r) => (trace, Some(r)),
                Err(e) => {
                    log::warn!("restart {i} (seed {seed}) failed: {e}");
                    trace.error = Some(e.to_string());
                    (trace, None)
                }
            }
        })
        .collect();
    let mut best: Option<(f64, S, usize)> = None;
    let mut traces = Vec::with_capacity(results.len());
    for (trace, r) in results {
        if let Some((v, s)) = r {
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, s, trace.restart));
            }
        }
        traces.push(trace);
    }
    let (value, strategy, best_restart) = best.ok_or_else(|| CoreError::Solver {
        context: "see-saw".into(),
        status: "every restart failed".into(),
    })?;
    Ok(SeesawOutcome {
        value,
        strategy,
        best_restart,
        traces,
    })
}
