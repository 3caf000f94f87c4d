//! Cross-module invariant suite.

use ccg_numeric::{residuals, solve_sdp, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::{classical_optimum, ClassicalOptions};
use crate::error::Result;
use crate::game::{build_cglmp_tensor, build_payoff_kernel, cglmp_value, game_value_of_behavior, Behavior, GameSpec, PayoffKernel};
use crate::npa::{build_moment_problem, upper_bound, Level};
use crate::quantum::Povm;
use crate::seesaw::{evaluate_pm, run_bell, run_pm, run_pm_frozen, SeesawOptions};
use crate::simulate::{analytic_value, simulate, StrategyFile};

pub const MONOTONE_TOL: f64 = 1e-9;
pub const EQUIVALENCE_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const SANDWICH_TOL: f64 = 1e-6;
pub const MAX_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: String,
    pub expected: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, observed: impl Into<String>, expected: impl Into<String>) {
        let c = CheckResult { name: name.into(), passed, observed: observed.into(), expected: expected.into() };
        if !c.passed {
            log::error!("{}: observed {}, expected {}", c.name, c.observed, c.expected);
        }
        self.checks.push(c);
    }
}

type KernelHook = Box<dyn Fn(&mut PayoffKernel) + Send + Sync>;

pub struct VerifyOptions {
    pub seed: u64,
    /// Applied to every kernel before the balance checks; for testing the
    /// suite itself.
    pub kernel_mutation: Option<KernelHook>,
    pub behaviors_per_d: usize,
    pub mc_rounds: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, kernel_mutation: None, behaviors_per_d: 100, mc_rounds: 1_000_000 }
    }
}

pub fn random_behavior<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Behavior {
    let mut p: Vec<f64> = (0..4 * d * d).map(|_| rng.random::<f64>()).collect();
    for block in p.chunks_mut(d * d) {
        let s: f64 = block.iter().sum();
        block.iter_mut().for_each(|v| *v /= s);
    }
    Behavior::new(d, p).expect("normalized by construction")
}

fn check_kernels(opts: &VerifyOptions, report: &mut VerifyReport) -> Result<()> {
    for d in 2..=11 {
        let spec = GameSpec::new(d)?;
        let mut kernel = build_payoff_kernel(&spec);
        if let Some(hook) = &opts.kernel_mutation {
            hook(&mut kernel);
        }
        let bad: Vec<String> = spec
            .inputs()
            .filter_map(|i| kernel.check_row(&spec, &i).err().map(|e| format!("{i:?}: {e}")))
            .collect();
        report.push(
            format!("kernel row balance and uniqueness, d = {d}"),
            bad.is_empty(),
            if bad.is_empty() { "all rows valid".to_string() } else { format!("{} bad rows, first {}", bad.len(), bad[0]) },
            "every row balanced with one payoff per output",
        );
    }
    Ok(())
}

fn check_equivalence(opts: &VerifyOptions, report: &mut VerifyReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for d in [2, 3, 5, 7] {
        let spec = GameSpec::new(d)?;
        let tensor = build_cglmp_tensor(d)?;
        let mut worst: f64 = 0.0;
        for _ in 0..opts.behaviors_per_d {
            let beh = random_behavior(d, &mut rng);
            worst = worst.max((game_value_of_behavior(&spec, &beh)? - cglmp_value(&tensor, &beh)?).abs());
        }
        report.push(
            format!("game value equals Bell value on {} random behaviors, d = {d}", opts.behaviors_per_d),
            worst <= EQUIVALENCE_TOL,
            format!("max difference {worst:e}"),
            format!("<= {EQUIVALENCE_TOL:e}"),
        );
    }
    Ok(())
}

fn check_seesaw(opts: &VerifyOptions, report: &mut VerifyReport) -> Result<f64> {
    let mut bell3 = 0.0;
    for d in [2, 3] {
        let spec = GameSpec::new(d)?;
        let sopts = SeesawOptions { restarts: 2, seed: opts.seed, ..Default::default() };
        let pm = run_pm(&spec, &sopts)?;
        let bell = run_bell(&spec, &sopts)?;
        if d == 3 {
            bell3 = bell.value;
        }
        for (what, traces) in [("prepare-and-measure", &pm.traces), ("Bell", &bell.traces)] {
            let worst = traces.iter().map(|t| t.max_decrease()).fold(0.0, f64::max);
            let failed = traces.iter().filter(|t| t.error.is_some()).count();
            report.push(
                format!("{what} see-saw monotonicity, d = {d}"),
                worst <= MONOTONE_TOL && failed == 0,
                format!("largest drop {worst:e}, {failed} failed restarts"),
                format!("drop <= {MONOTONE_TOL:e}, no failures"),
            );
        }
        let s = &pm.strategy;
        let povm_res = s
            .measurements
            .iter()
            .chain(&bell.strategy.alice)
            .chain(&bell.strategy.bob)
            .map(|m: &Povm| m.completeness_residual().max(-m.min_eigenvalue()))
            .fold(0.0, f64::max);
        report.push(
            format!("see-saw measurement validity, d = {d}"),
            povm_res <= RESIDUAL_TOL,
            format!("worst residual {povm_res:e}"),
            format!("<= {RESIDUAL_TOL:e}"),
        );
        let full = evaluate_pm(&spec, s)?;
        report.push(
            format!("prepare-and-measure full sum equals collapsed objective, d = {d}"),
            (full - pm.value).abs() <= 1e-12,
            format!("{full} vs {}", pm.value),
            "difference <= 1e-12",
        );
    }
    Ok(bell3)
}

fn check_sdp(report: &mut VerifyReport) -> Result<()> {
    for (d, level) in [(3, Level::One), (3, Level::OneAB)] {
        let (_, sdp) = build_moment_problem(d, level)?;
        let sol = solve_sdp(&sdp, &SolverOptions::default())?;
        let r = residuals(&sdp, &sol)?;
        report.push(
            format!("solver residuals, level {level} relaxation, d = {d}"),
            sol.status.is_optimal() && r.within(RESIDUAL_TOL, RESIDUAL_TOL),
            format!("{:?}: primal {:e}, dual {:e}, gap {:e}, min eig X {:e}, S {:e}", sol.status, r.primal, r.dual, r.gap, r.min_eig_x, r.min_eig_s),
            format!("optimal, all residuals <= {RESIDUAL_TOL:e}"),
        );
    }
    Ok(())
}

fn check_sandwich(bell3: f64, report: &mut VerifyReport) -> Result<()> {
    let spec = GameSpec::new(2)?;
    let bell2 = run_bell(&spec, &SeesawOptions { restarts: 1, ..Default::default() })?.value;
    for (d, lower) in [(2, bell2), (3, bell3)] {
        let mid = upper_bound(d, Level::OneAB, &SolverOptions::default())?.value;
        let top = upper_bound(d, Level::One, &SolverOptions::default())?.value;
        report.push(
            format!("sandwich see-saw <= level 1+AB <= level 1, d = {d}"),
            lower <= mid + SANDWICH_TOL && mid <= top + SANDWICH_TOL,
            format!("{lower:.8} <= {mid:.8} <= {top:.8}"),
            format!("ordered within {SANDWICH_TOL:e}"),
        );
    }
    Ok(())
}

fn check_classical(report: &mut VerifyReport) -> Result<()> {
    for d in 2..=3 {
        let spec = GameSpec::new(d)?;
        let full = classical_optimum(&spec, ClassicalOptions::default())?;
        let pruned = classical_optimum(&spec, ClassicalOptions { prune_symmetry: true, ..Default::default() })?;
        report.push(
            format!("classical search with and without symmetry pruning, d = {d}"),
            full.scaled_score == pruned.scaled_score && full.message == pruned.message,
            format!("{} vs {}", full.value, pruned.value),
            "identical optimum and message table",
        );
    }
    Ok(())
}

fn check_monte_carlo(opts: &VerifyOptions, report: &mut VerifyReport) -> Result<()> {
    let spec2 = GameSpec::new(2)?;
    let sol = classical_optimum(&spec2, ClassicalOptions::default())?;
    let classical = StrategyFile::Classical { d: 2, message: sol.message.table.clone(), response: sol.response.table.clone() };
    let (_, pm) = run_pm_frozen(&spec2);
    let refs = [
        ("optimal classical, d = 2", classical, opts.mc_rounds),
        ("frozen-basis prepare-and-measure, d = 2", StrategyFile::PrepareMeasure((&pm).into()), opts.mc_rounds),
        ("uniform random answers, d = 3", StrategyFile::UniformRandom { d: 3 }, opts.mc_rounds / 10),
    ];
    for (i, (name, strat, rounds)) in refs.into_iter().enumerate() {
        let exact = analytic_value(&strat)?;
        let est = simulate(&strat, rounds, opts.seed.wrapping_add(i as u64))?;
        let z = est.sigmas_from(exact);
        report.push(
            format!("Monte Carlo agrees with analytic value: {name}"),
            z <= MAX_SIGMAS,
            format!("{:.5} +- {:.5} vs {exact:.5} ({z:.2} sigma)", est.mean, est.stderr),
            format!("within {MAX_SIGMAS} sigma"),
        );
    }
    Ok(())
}

/// Runs every check; numeric failures are reported, errors abort.
pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    check_kernels(opts, &mut report)?;
    check_equivalence(opts, &mut report)?;
    check_classical(&mut report)?;
    let bell3 = check_seesaw(opts, &mut report)?;
    check_sdp(&mut report)?;
    check_sandwich(bell3, &mut report)?;
    check_monte_carlo(opts, &mut report)?;
    Ok(report)
}
