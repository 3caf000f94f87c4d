//! Prepare-and-measure strategies: Bob sends `|psi_{y0 y1}>`, Alice measures
//! with setting `x1` and answers `G = a + x0`.

use ccg_numeric::{Complex64, HermitianMatrix, SolverOptions};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{run_restarts, SeesawOptions, SeesawOutcome, SeesawTrace, StartKind};
use crate::error::{CoreError, Result};
use crate::game::{modd, GameInput, GameSpec};
use crate::quantum::{optimize_povm, random_state, ComplexVec, Povm, PovmData};

/// Unit-norm tolerance for prepared states.
pub const STATE_TOL: f64 = 1e-12;

/// Frozen-basis phases for Alice's two settings.
pub const FROZEN_SHIFTS: [f64; 2] = [0.25, -0.25];

#[derive(Debug, Clone)]
pub struct PrepareMeasureStrategy {
    pub d: usize,
    /// `|psi_{y0 y1}>` at index `y0 * 2 + y1`.
    pub states: Vec<DVector<Complex64>>,
    pub measurements: [Povm; 2],
}

impl PrepareMeasureStrategy {
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if self.states.len() != 2 * d {
            return Err(CoreError::DimensionMismatch { expected: 2 * d, found: self.states.len() });
        }
        for s in &self.states {
            if s.len() != d {
                return Err(CoreError::DimensionMismatch { expected: d, found: s.len() });
            }
            if (s.norm() - 1.0).abs() > STATE_TOL * d as f64 {
                return Err(CoreError::InvalidStrategy(format!("state norm {}", s.norm())));
            }
        }
        for m in &self.measurements {
            if m.dim() != d || m.outcomes() != d {
                return Err(CoreError::DimensionMismatch { expected: d, found: m.dim() });
            }
            m.validate(crate::quantum::POVM_TOL)?;
        }
        Ok(())
    }

    pub fn state(&self, y0: usize, y1: usize) -> &DVector<Complex64> {
        &self.states[y0 * 2 + y1]
    }

    /// Computational-basis states `|y0>` and computational measurements.
    pub fn classical_embedding(d: usize) -> Self {
        let states = (0..2 * d)
            .map(|i| {
                let mut v = DVector::zeros(d);
                v[i / 2] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        Self {
            d,
            states,
            measurements: [Povm::computational(d), Povm::computational(d)],
        }
    }

    /// `(y0, y1, x1) -> P(a | x1, psi_{y0 y1})` table, row-major.
    pub fn outcome_probabilities(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(4 * self.d);
        for s in &self.states {
            for m in &self.measurements {
                out.push(m.probabilities(s));
            }
        }
        out
    }
}

/// `a+` and `a-`: outcomes that hit `f_k - x0` and `h_k - x0`.
fn outcome_targets(d: usize, x1: usize, y0: usize, y1: usize, k: usize) -> (usize, usize) {
    let base = y0 as i64 - (x1 * y1) as i64;
    let sign = if (x1 + y1) % 2 == 0 { 1 } else { -1 };
    let k = k as i64;
    (modd(base - sign * k, d), modd(base + sign * (k + 1), d))
}

/// Delta over all `4 d^2` inputs, with Alice answering `G = a + x0`.
pub fn evaluate_pm(spec: &GameSpec, strat: &PrepareMeasureStrategy) -> Result<f64> {
    strat.validate()?;
    let d = spec.d();
    if strat.d != d {
        return Err(CoreError::DimensionMismatch { expected: d, found: strat.d });
    }
    let c = spec.coefficients_f64();
    let probs: Vec<Vec<Vec<f64>>> = strat
        .states
        .iter()
        .map(|s| strat.measurements.iter().map(|m| m.probabilities(s)).collect())
        .collect();
    let mut total = 0.0;
    for input in spec.inputs() {
        let GameInput { x0, x1, y0, y1 } = input;
        let p = &probs[y0 * 2 + y1][x1];
        for (k, ck) in c.iter().enumerate() {
            let (f, h) = spec.target_values(&input, k)?;
            total += ck * (p[modd(f as i64 - x0 as i64, d)] - p[modd(h as i64 - x0 as i64, d)]);
        }
    }
    Ok(total / (4 * d * d) as f64)
}

/// Delta with the `x0` sum carried out analytically.
pub fn collapsed_objective(spec: &GameSpec, strat: &PrepareMeasureStrategy) -> Result<f64> {
    strat.validate()?;
    let r = score_operators(spec, &strat.measurements);
    Ok(strat.states.iter().zip(&r).map(|(s, r)| r.expectation(s)).sum())
}

/// `R_{y0 y1} = (1/4d) sum_{x1, k} c_k (M^{x1}_{a+} - M^{x1}_{a-})`, index
/// `y0 * 2 + y1`.
pub fn score_operators(spec: &GameSpec, measurements: &[Povm; 2]) -> Vec<HermitianMatrix> {
    let d = spec.d();
    let c = spec.coefficients_f64();
    let norm = 1.0 / (4 * d) as f64;
    let mut out = Vec::with_capacity(2 * d);
    for y0 in 0..d {
        for y1 in 0..2 {
            let mut r = HermitianMatrix::zeros(d);
            for (x1, m) in measurements.iter().enumerate() {
                for (k, ck) in c.iter().enumerate() {
                    let (ap, am) = outcome_targets(d, x1, y0, y1, k);
                    r.add_scaled(&m.elements()[ap], norm * ck);
                    r.add_scaled(&m.elements()[am], -norm * ck);
                }
            }
            out.push(r);
        }
    }
    out
}

/// Top eigenvectors of the score operators, and the resulting objective.
pub fn update_states(spec: &GameSpec, measurements: &[Povm; 2]) -> (Vec<DVector<Complex64>>, f64) {
    let mut value = 0.0;
    let states = score_operators(spec, measurements)
        .iter()
        .map(|r| {
            let (lambda, v) = r.top_eigenpair();
            value += lambda;
            v
        })
        .collect();
    (states, value)
}

/// `F^{x1}_a`, the operator multiplying `M^{x1}_a` in the objective.
pub fn measurement_scores(spec: &GameSpec, states: &[DVector<Complex64>], x1: usize) -> Vec<HermitianMatrix> {
    let d = spec.d();
    let c = spec.coefficients_f64();
    let norm = 1.0 / (4 * d) as f64;
    let mut f = vec![HermitianMatrix::zeros(d); d];
    for y0 in 0..d {
        for y1 in 0..2 {
            let p = HermitianMatrix::projector(&states[y0 * 2 + y1]);
            for (k, ck) in c.iter().enumerate() {
                let (ap, am) = outcome_targets(d, x1, y0, y1, k);
                f[ap].add_scaled(&p, norm * ck);
                f[am].add_scaled(&p, -norm * ck);
            }
        }
    }
    f
}

/// Optimal measurements for fixed states, one SDP per setting, with the
/// per-setting values.
pub fn update_measurements(
    spec: &GameSpec,
    states: &[DVector<Complex64>],
    sdp: &SolverOptions,
) -> Result<([Povm; 2], [f64; 2])> {
    let m0 = optimize_povm(&measurement_scores(spec, states, 0), sdp)?;
    let m1 = optimize_povm(&measurement_scores(spec, states, 1), sdp)?;
    Ok(([m0.povm, m1.povm], [m0.value, m1.value]))
}

/// Like [`update_measurements`] but keeps the old measurement for a setting
/// whenever the new one does not score higher.
fn guarded_measurements(
    spec: &GameSpec,
    states: &[DVector<Complex64>],
    old: [Povm; 2],
    sdp: &SolverOptions,
) -> Result<([Povm; 2], f64)> {
    let (new, vals) = update_measurements(spec, states, sdp)?;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(2);
    for (x1, (n, o)) in new.into_iter().zip(old).enumerate() {
        let prev = o.score(&measurement_scores(spec, states, x1));
        if vals[x1] >= prev {
            total += vals[x1];
            out.push(n);
        } else {
            total += prev;
            out.push(o);
        }
    }
    let [a, b]: [Povm; 2] = out.try_into().expect("two settings");
    Ok(([a, b], total))
}

fn iterate(
    spec: &GameSpec,
    mut strat: PrepareMeasureStrategy,
    opts: &SeesawOptions,
    trace: &mut SeesawTrace,
) -> Result<(f64, PrepareMeasureStrategy)> {
    trace.objectives.push(collapsed_objective(spec, &strat)?);
    let mut last = f64::NEG_INFINITY;
    for it in 0..opts.max_iters {
        trace.iterations = it + 1;
        let (states, v) = update_states(spec, &strat.measurements);
        strat.states = states;
        trace.objectives.push(v);
        let (meas, v) = guarded_measurements(spec, &strat.states, strat.measurements, &opts.sdp)?;
        strat.measurements = meas;
        trace.objectives.push(v);
        if (v - last).abs() < opts.conv_tol {
            trace.converged = true;
            break;
        }
        last = v;
    }
    let value = collapsed_objective(spec, &strat)?;
    Ok((value, strat))
}

/// Frozen Fourier-type measurements for both settings.
pub fn frozen_measurements(d: usize) -> [Povm; 2] {
    FROZEN_SHIFTS.map(|s| Povm::fourier(d, -1.0, s))
}

/// Best-of-restarts see-saw lower bound on the prepare-and-measure value.
pub fn run_pm(spec: &GameSpec, opts: &SeesawOptions) -> Result<SeesawOutcome<PrepareMeasureStrategy>> {
    let d = spec.d();
    run_restarts(opts, &[StartKind::Classical, StartKind::Canonical], |trace| {
        let start = match trace.start {
            StartKind::Classical => PrepareMeasureStrategy::classical_embedding(d),
            StartKind::Canonical => {
                let measurements = frozen_measurements(d);
                let (states, _) = update_states(spec, &measurements);
                PrepareMeasureStrategy { d, states, measurements }
            }
            StartKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(trace.seed);
                let states = (0..2 * d).map(|_| random_state(d, &mut rng)).collect();
                let measurements = [Povm::random_projective(d, &mut rng), Povm::random_projective(d, &mut rng)];
                PrepareMeasureStrategy { d, states, measurements }
            }
        };
        iterate(spec, start, opts, trace)
    })
}

/// Measurements frozen to the Fourier-type bases; states optimal for them.
pub fn run_pm_frozen(spec: &GameSpec) -> (f64, PrepareMeasureStrategy) {
    let d = spec.d();
    let measurements = frozen_measurements(d);
    let (states, value) = update_states(spec, &measurements);
    (value, PrepareMeasureStrategy { d, states, measurements })
}

/// JSON form: states as `[re, im]` vectors, measurements as row-major
/// matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmStrategyData {
    pub d: usize,
    pub states: Vec<ComplexVec>,
    pub measurements: Vec<PovmData>,
}

impl From<&PrepareMeasureStrategy> for PmStrategyData {
    fn from(s: &PrepareMeasureStrategy) -> Self {
        Self {
            d: s.d,
            states: s.states.iter().map(ComplexVec::from).collect(),
            measurements: s.measurements.iter().map(PovmData::from).collect(),
        }
    }
}

impl PmStrategyData {
    pub fn to_strategy(&self) -> Result<PrepareMeasureStrategy> {
        if self.measurements.len() != 2 {
            return Err(CoreError::DimensionMismatch { expected: 2, found: self.measurements.len() });
        }
        let m0 = self.measurements[0].to_povm()?;
        let m1 = self.measurements[1].to_povm()?;
        let s = PrepareMeasureStrategy {
            d: self.d,
            states: self.states.iter().map(ComplexVec::to_vector).collect(),
            measurements: [m0, m1],
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_embedding_scores_half() {
        for d in 2..=7 {
            let spec = GameSpec::new(d).unwrap();
            let s = PrepareMeasureStrategy::classical_embedding(d);
            assert!((evaluate_pm(&spec, &s).unwrap() - 0.5).abs() < 1e-12);
            assert!((collapsed_objective(&spec, &s).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_measurement_scores_zero() {
        let d = 4;
        let spec = GameSpec::new(d).unwrap();
        let trivial = Povm::new(vec![HermitianMatrix::identity(d).scale(1.0 / d as f64); d]).unwrap();
        let mut s = PrepareMeasureStrategy::classical_embedding(d);
        s.measurements = [trivial.clone(), trivial];
        assert!(collapsed_objective(&spec, &s).unwrap().abs() < 1e-14);
        assert!(evaluate_pm(&spec, &s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn frozen_d2_and_d3() {
        let (v2, _) = run_pm_frozen(&GameSpec::new(2).unwrap());
        assert!((v2 - 0.5f64.sqrt()).abs() < 1e-12, "{v2}");
        let (v3, s3) = run_pm_frozen(&GameSpec::new(3).unwrap());
        assert!((v3 - 0.7287).abs() < 2e-3, "{v3}");
        let spec = GameSpec::new(3).unwrap();
        assert!((evaluate_pm(&spec, &s3).unwrap() - v3).abs() < 1e-12);
    }

    #[test]
    fn measurement_update_matches_objective() {
        let spec = GameSpec::new(3).unwrap();
        let (_, s) = run_pm_frozen(&spec);
        let (meas, vals) = update_measurements(&spec, &s.states, &SolverOptions::with_tol(1e-10)).unwrap();
        let t = PrepareMeasureStrategy { d: 3, states: s.states.clone(), measurements: meas };
        let v = collapsed_objective(&spec, &t).unwrap();
        assert!((v - vals[0] - vals[1]).abs() < 1e-10);
        let before = collapsed_objective(&spec, &s).unwrap();
        assert!(v >= before - 1e-9, "{v} < {before}");
    }

    #[test]
    fn json_round_trip() {
        let (_, s) = run_pm_frozen(&GameSpec::new(3).unwrap());
        let data = PmStrategyData::from(&s);
        let back: PmStrategyData = serde_json::from_str(&serde_json::to_string(&data).unwrap()).unwrap();
        assert_eq!(back, data);
        back.to_strategy().unwrap();
    }
}
