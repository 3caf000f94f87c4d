//! Strategy files and the Monte Carlo protocol simulator.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::game::{build_payoff_kernel, event_index, modd, GameInput, GameSpec};
use crate::seesaw::{behavior_of, EntangledStrategyData, PmStrategyData};

pub const STRATEGY_SCHEMA: &str = "ccg-strategy/1";

/// Every strategy the simulator can play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyFile {
    /// `message[y0 * 2 + y1]`, `response[(x0 * 2 + x1) * d + m]`.
    Classical {
        d: usize,
        message: Vec<usize>,
        response: Vec<usize>,
    },
    PrepareMeasure(PmStrategyData),
    Entangled(EntangledStrategyData),
    /// Alice answers uniformly at random.
    UniformRandom { d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDocument {
    pub schema: String,
    pub strategy: StrategyFile,
}

impl StrategyDocument {
    pub fn new(strategy: StrategyFile) -> Self {
        Self { schema: STRATEGY_SCHEMA.into(), strategy }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema != STRATEGY_SCHEMA {
            return Err(CoreError::InvalidStrategy(format!("unknown schema `{}`", doc.schema)));
        }
        Ok(doc)
    }
}

impl StrategyFile {
    pub fn d(&self) -> usize {
        match self {
            StrategyFile::Classical { d, .. } | StrategyFile::UniformRandom { d } => *d,
            StrategyFile::PrepareMeasure(s) => s.d,
            StrategyFile::Entangled(s) => s.d,
        }
    }
}

/// Per-input answer distributions of a strategy, `4 d^2` rows of length d.
pub fn answer_distributions(strategy: &StrategyFile) -> Result<Vec<Vec<f64>>> {
    let d = strategy.d();
    let spec = GameSpec::new(d)?;
    let mut rows = Vec::with_capacity(spec.num_inputs());
    match strategy {
        StrategyFile::Classical { message, response, .. } => {
            if message.len() != 2 * d || response.len() != 2 * d * d || message.iter().chain(response).any(|&v| v >= d) {
                return Err(CoreError::InvalidStrategy("classical tables have the wrong shape".into()));
            }
            for i in spec.inputs() {
                let m = message[i.y0 * 2 + i.y1];
                let mut row = vec![0.0; d];
                row[response[(i.x0 * 2 + i.x1) * d + m]] = 1.0;
                rows.push(row);
            }
        }
        StrategyFile::UniformRandom { .. } => {
            rows.resize(spec.num_inputs(), vec![1.0 / d as f64; d]);
        }
        StrategyFile::PrepareMeasure(data) => {
            let s = data.to_strategy()?;
            for i in spec.inputs() {
                let p = s.measurements[i.x1].probabilities(s.state(i.y0, i.y1));
                rows.push((0..d).map(|g| p[modd(g as i64 - i.x0 as i64, d)]).collect());
            }
        }
        StrategyFile::Entangled(data) => {
            let beh = behavior_of(&data.to_strategy()?)?;
            let probs = beh.probabilities();
            for i in spec.inputs() {
                let (x, y) = (i.x1, 1 - i.y1);
                let mut row = vec![0.0; d];
                for a in 0..d {
                    for b in 0..d {
                        let m = modd(i.y0 as i64 - b as i64, d);
                        row[(i.x0 + m + a) % d] += probs[event_index(d, a, b, x, y)];
                    }
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub rounds: u64,
}

impl Estimate {
    /// `|mean - target|` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == target { 0.0 } else { f64::INFINITY }
        } else {
            (self.mean - target).abs() / self.stderr
        }
    }
}

/// Plays `rounds` rounds on uniform inputs, sampling answers from the
/// strategy's outcome distributions, and scores each on the payoff kernel.
pub fn simulate(strategy: &StrategyFile, rounds: u64, seed: u64) -> Result<Estimate> {
    if rounds < 2 {
        return Err(CoreError::InvalidStrategy("need at least two rounds".into()));
    }
    let d = strategy.d();
    let spec = GameSpec::new(d)?;
    let kernel = build_payoff_kernel(&spec);
    let samplers = answer_distributions(strategy)?
        .into_iter()
        .map(|row| {
            let clipped: Vec<f64> = row.iter().map(|p| p.max(0.0)).collect();
            WeightedIndex::new(clipped).map_err(|e| CoreError::InvalidStrategy(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = spec.scale() as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..rounds {
        let i = rng.random_range(0..spec.num_inputs());
        let g = samplers[i].sample(&mut rng);
        let s = kernel.payoff(&GameInput::from_index(i, d), g) as f64 / scale;
        sum += s;
        sum_sq += s * s;
    }
    let n = rounds as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(Estimate { mean, stderr: (var / n).sqrt(), rounds })
}

/// Exact value of a strategy from its answer distributions.
pub fn analytic_value(strategy: &StrategyFile) -> Result<f64> {
    let rows = answer_distributions(strategy)?;
    let spec = GameSpec::new(strategy.d())?;
    crate::game::delta_of_output_policy(&spec, |i| rows[i.index(spec.d())].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_d2_simulation() {
        let s = StrategyFile::Classical { d: 2, message: vec![0, 0, 1, 1], response: vec![0, 1, 0, 1, 1, 0, 1, 0] };
        assert!((analytic_value(&s).unwrap() - 0.5).abs() < 1e-12);
        let e = simulate(&s, 100_000, 1).unwrap();
        assert!(e.sigmas_from(0.5) < 4.0, "{e:?}");
    }

    #[test]
    fn uniform_is_zero() {
        let s = StrategyFile::UniformRandom { d: 3 };
        assert!(analytic_value(&s).unwrap().abs() < 1e-12);
        let e = simulate(&s, 50_000, 2).unwrap();
        assert!(e.sigmas_from(0.0) < 4.0);
    }

    #[test]
    fn document_round_trip() {
        let doc = StrategyDocument::new(StrategyFile::UniformRandom { d: 4 });
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"kind\":\"uniform_random\""));
        assert_eq!(StrategyDocument::parse(&text).unwrap(), doc);
        assert!(StrategyDocument::parse("{\"schema\":\"x\",\"strategy\":{\"kind\":\"uniform_random\",\"d\":2}}").is_err());
    }
}
