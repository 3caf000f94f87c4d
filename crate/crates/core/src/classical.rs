//! Exact classical value of G_d by exhaustive search over Bob's message
//! functions, with Alice answering pointwise-optimally.
//!
//! Nothing here assumes the linear-strategy reduction; the search covers all
//! `d^(2d)` message functions (or `d^(2d-1)` with the relabeling symmetry
//! `m -> m + const` fixed away). Scoring is exact integer arithmetic on the
//! scaled payoff kernel.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::game::{build_payoff_kernel, modd, GameInput, GameSpec, LinearStrategy, PayoffKernel};

/// Largest d searched without `allow_heavy`.
pub const EXHAUSTIVE_MAX_D: usize = 5;
/// Largest d searched at all.
pub const HEAVY_MAX_D: usize = 6;

/// Bob's message `m(y0, y1)`, stored at index `y0 * 2 + y1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageFunction {
    pub d: usize,
    pub table: Vec<usize>,
}

impl MessageFunction {
    pub fn new(d: usize, table: Vec<usize>) -> Result<Self> {
        if table.len() != 2 * d || table.iter().any(|&m| m >= d) {
            return Err(CoreError::InvalidStrategy(format!(
                "message table must have {} entries below {d}",
                2 * d
            )));
        }
        Ok(Self { d, table })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        let table = (0..2 * d).map(|i| f(i / 2, i % 2) % d).collect();
        Self { d, table }
    }

    pub fn message(&self, y0: usize, y1: usize) -> usize {
        self.table[y0 * 2 + y1]
    }
}

/// Alice's answer `G(x0, x1, m)` at index `(x0 * 2 + x1) * d + m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseTable {
    pub d: usize,
    pub table: Vec<usize>,
}

impl ResponseTable {
    pub fn answer(&self, x0: usize, x1: usize, m: usize) -> usize {
        self.table[(x0 * 2 + x1) * self.d + m]
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalSolution {
    pub value: BigRational,
    pub message: MessageFunction,
    pub response: ResponseTable,
    pub scaled_score: i64,
    /// Message functions (within the searched space) attaining the optimum.
    pub ties: u64,
    /// Message functions examined.
    pub searched: u64,
    pub pruned: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClassicalOptions {
    /// Fix `m(0, 0) = 0`; the optimum is unchanged since Alice can absorb
    /// any constant shift of the message.
    pub prune_symmetry: bool,
    /// Permit d = 6 (about 2.2e9 message functions).
    pub allow_heavy: bool,
}

/// Best response of Alice to `msg` and the total scaled score over all
/// `4 d^2` inputs. Ties go to the smallest `G`.
pub fn best_response(spec: &GameSpec, msg: &MessageFunction) -> Result<(i64, ResponseTable)> {
    let d = spec.d();
    if msg.d != d || msg.table.len() != 2 * d {
        return Err(CoreError::DimensionMismatch {
            expected: 2 * d,
            found: msg.table.len(),
        });
    }
    let kernel = build_payoff_kernel(spec);
    Ok(best_response_with(&kernel, spec, msg))
}

fn best_response_with(kernel: &PayoffKernel, spec: &GameSpec, msg: &MessageFunction) -> (i64, ResponseTable) {
    let d = spec.d();
    let mut table = vec![0usize; 2 * d * d];
    let mut total = 0i64;
    let mut scores = vec![0i64; d];
    for x0 in 0..d {
        for x1 in 0..2 {
            for m in 0..d {
                scores.iter_mut().for_each(|s| *s = 0);
                for y0 in 0..d {
                    for y1 in 0..2 {
                        if msg.message(y0, y1) != m {
                            continue;
                        }
                        let row = kernel.row(&GameInput::new(x0, x1, y0, y1));
                        for (s, w) in scores.iter_mut().zip(row) {
                            *s += w;
                        }
                    }
                }
                let (g, best) = scores
                    .iter()
                    .enumerate()
                    .fold((0, i64::MIN), |acc, (g, &s)| if s > acc.1 { (g, s) } else { acc });
                table[(x0 * 2 + x1) * d + m] = g;
                total += best;
            }
        }
    }
    (total, ResponseTable { d, table })
}

/// Depth-first enumeration state for one subtree of message functions.
struct Search<'a> {
    d: usize,
    /// `w0[((x1 * d + y0) * 2 + y1) * d + g]`: payoff at `x0 = 0`.
    w0: &'a [i32],
    /// Running `T[x1][m][g]` sums at index `(x1 * d + m) * d + g`.
    acc: Vec<i32>,
    table: Vec<usize>,
    best: i64,
    best_table: Vec<usize>,
    ties: u64,
    searched: u64,
}

impl Search<'_> {
    fn push(&mut self, pos: usize, m: usize, sign: i32) {
        let d = self.d;
        let (y0, y1) = (pos / 2, pos % 2);
        for x1 in 0..2 {
            let src = ((x1 * d + y0) * 2 + y1) * d;
            let dst = (x1 * d + m) * d;
            for g in 0..d {
                self.acc[dst + g] += sign * self.w0[src + g];
            }
        }
    }

    fn leaf_score(&self) -> i64 {
        self.acc
            .chunks_exact(self.d)
            .map(|c| *c.iter().max().unwrap() as i64)
            .sum()
    }

    fn run(&mut self, pos: usize) {
        let d = self.d;
        if pos == 2 * d {
            self.searched += 1;
            // Every x0 sees the same maximum, shifted in G.
            let score = d as i64 * self.leaf_score();
            if score > self.best {
                self.best = score;
                self.best_table.clone_from(&self.table);
                self.ties = 1;
            } else if score == self.best {
                self.ties += 1;
            }
            return;
        }
        for m in 0..d {
            self.table[pos] = m;
            self.push(pos, m, 1);
            self.run(pos + 1);
            self.push(pos, m, -1);
        }
    }
}

/// Exhaustive classical optimum.
pub fn classical_optimum(spec: &GameSpec, opts: ClassicalOptions) -> Result<ClassicalSolution> {
    let d = spec.d();
    if d > HEAVY_MAX_D {
        return Err(CoreError::SearchSpaceTooLarge {
            d,
            reason: format!("d^(2d) message functions; exhaustive search stops at d = {HEAVY_MAX_D}"),
        });
    }
    if d > EXHAUSTIVE_MAX_D && !opts.allow_heavy {
        return Err(CoreError::SearchSpaceTooLarge {
            d,
            reason: "long-running exhaustive search; enable allow_heavy".into(),
        });
    }
    let kernel = build_payoff_kernel(spec);
    let mut w0 = vec![0i32; 2 * d * 2 * d * d];
    for x1 in 0..2 {
        for y0 in 0..d {
            for y1 in 0..2 {
                let row = kernel.row(&GameInput::new(0, x1, y0, y1));
                let base = ((x1 * d + y0) * 2 + y1) * d;
                for g in 0..d {
                    w0[base + g] = row[g] as i32;
                }
            }
        }
    }

    // Split on the first two table entries; each prefix is a lexicographic
    // block, so merging in prefix order keeps the smallest optimal table.
    let first: Vec<usize> = if opts.prune_symmetry { vec![0] } else { (0..d).collect() };
    let prefixes: Vec<(usize, usize)> = first
        .iter()
        .flat_map(|&a| (0..d).map(move |b| (a, b)))
        .collect();
    let results: Vec<(i64, Vec<usize>, u64, u64)> = prefixes
        .par_iter()
        .map(|&(m0, m1)| {
            let mut s = Search {
                d,
                w0: &w0,
                acc: vec![0; 2 * d * d],
                table: vec![0; 2 * d],
                best: i64::MIN,
                best_table: Vec::new(),
                ties: 0,
                searched: 0,
            };
            s.table[0] = m0;
            s.push(0, m0, 1);
            s.table[1] = m1;
            s.push(1, m1, 1);
            s.run(2);
            (s.best, s.best_table, s.ties, s.searched)
        })
        .collect();

    let mut best = i64::MIN;
    let mut best_table = Vec::new();
    let mut ties = 0;
    let mut searched = 0;
    for (score, table, t, n) in results {
        searched += n;
        if score > best {
            best = score;
            best_table = table;
            ties = t;
        } else if score == best {
            ties += t;
        }
    }
    let message = MessageFunction::new(d, best_table)?;
    let (scaled_score, response) = best_response_with(&kernel, spec, &message);
    debug_assert_eq!(scaled_score, best);
    Ok(ClassicalSolution {
        value: spec.delta_from_scaled(scaled_score),
        message,
        response,
        scaled_score,
        ties,
        searched,
        pruned: opts.prune_symmetry,
    })
}

/// Exact Delta of the linear strategy `G = x0 + y0 - b(y1) + a(x1)`.
pub fn linear_strategy_value(spec: &GameSpec, strat: &LinearStrategy) -> BigRational {
    let kernel = build_payoff_kernel(spec);
    let d = spec.d();
    let total: i64 = spec
        .inputs()
        .map(|input| kernel.payoff(&input, strat.output(d, &input)))
        .sum();
    spec.delta_from_scaled(total)
}

/// The message function and response realising a linear strategy.
pub fn linear_strategy_tables(d: usize, strat: &LinearStrategy) -> (MessageFunction, ResponseTable) {
    let msg = MessageFunction::from_fn(d, |y0, y1| strat.message(d, y0, y1));
    let mut table = vec![0; 2 * d * d];
    for x0 in 0..d {
        for x1 in 0..2 {
            for m in 0..d {
                table[(x0 * 2 + x1) * d + m] = modd((x0 + m + strat.a_map[x1]) as i64, d);
            }
        }
    }
    (msg, ResponseTable { d, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::delta_of_deterministic_policy;
    use num_bigint::BigInt;
    use num_traits::Zero;

    fn half() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    #[test]
    fn chsh_message_scores_eight() {
        let spec = GameSpec::new(2).unwrap();
        let msg = MessageFunction::from_fn(2, |y0, _| y0);
        let (score, _) = best_response(&spec, &msg).unwrap();
        assert_eq!(score, 8);
        assert_eq!(spec.delta_from_scaled(score), half());
    }

    #[test]
    fn constant_message_is_worse() {
        let spec = GameSpec::new(2).unwrap();
        let msg = MessageFunction::from_fn(2, |_, _| 0);
        let (score, _) = best_response(&spec, &msg).unwrap();
        assert!(spec.delta_from_scaled(score) < half());
    }

    #[test]
    fn y0_message_reaches_half_for_every_d() {
        for d in 2..=9 {
            let spec = GameSpec::new(d).unwrap();
            let msg = MessageFunction::from_fn(d, |y0, _| y0);
            let (score, resp) = best_response(&spec, &msg).unwrap();
            assert_eq!(spec.delta_from_scaled(score), half(), "d = {d}");
            let replay = delta_of_deterministic_policy(&spec, |i| {
                resp.answer(i.x0, i.x1, msg.message(i.y0, i.y1))
            })
            .unwrap();
            assert_eq!(replay, half());
        }
    }

    #[test]
    fn messages_ignoring_y0_score_zero() {
        // Exhaustive over all y0-independent message functions, d <= 4.
        for d in 2..=4 {
            let spec = GameSpec::new(d).unwrap();
            for m0 in 0..d {
                for m1 in 0..d {
                    let msg = MessageFunction::from_fn(d, |_, y1| if y1 == 0 { m0 } else { m1 });
                    let (score, _) = best_response(&spec, &msg).unwrap();
                    assert_eq!(score, 0, "d = {d}, ({m0}, {m1})");
                }
            }
        }
    }

    /// Straight enumeration from the target functions, without the kernel.
    fn naive_optimum(d: usize) -> BigRational {
        let spec = GameSpec::new(d).unwrap();
        let coeffs = spec.coefficients();
        let n = 2 * d;
        let mut best: Option<BigRational> = None;
        for code in 0..d.pow(n as u32) {
            let table: Vec<usize> = (0..n).map(|i| code / d.pow((n - 1 - i) as u32) % d).collect();
            let mut total = BigRational::zero();
            for x0 in 0..d {
                for x1 in 0..2 {
                    for m in 0..d {
                        let mut top: Option<BigRational> = None;
                        for g in 0..d {
                            let mut s = BigRational::zero();
                            for y0 in 0..d {
                                for y1 in 0..2 {
                                    if table[y0 * 2 + y1] != m {
                                        continue;
                                    }
                                    let input = GameInput::new(x0, x1, y0, y1);
                                    for (k, c) in coeffs.iter().enumerate() {
                                        let (f, h) = spec.target_values(&input, k).unwrap();
                                        if g == f {
                                            s += c;
                                        }
                                        if g == h {
                                            s -= c;
                                        }
                                    }
                                }
                            }
                            if top.as_ref().is_none_or(|t| s > *t) {
                                top = Some(s);
                            }
                        }
                        total += top.unwrap();
                    }
                }
            }
            if best.as_ref().is_none_or(|b| total > *b) {
                best = Some(total);
            }
        }
        best.unwrap() / BigRational::from_integer(BigInt::from(4 * d * d))
    }

    #[test]
    fn optimum_matches_naive_enumeration() {
        for d in 2..=3 {
            let spec = GameSpec::new(d).unwrap();
            let sol = classical_optimum(&spec, ClassicalOptions::default()).unwrap();
            assert_eq!(sol.value, naive_optimum(d), "d = {d}");
            assert!(sol.value >= half());
            assert_eq!(sol.searched, (d as u64).pow(2 * d as u32));
            let (score, _) = best_response(&spec, &sol.message).unwrap();
            assert_eq!(score, sol.scaled_score);
            let replay = delta_of_deterministic_policy(&spec, |i| {
                sol.response.answer(i.x0, i.x1, sol.message.message(i.y0, i.y1))
            })
            .unwrap();
            assert_eq!(replay, sol.value);
        }
    }

    #[test]
    fn pruning_agrees_with_full_search() {
        for d in 2..=3 {
            let spec = GameSpec::new(d).unwrap();
            let full = classical_optimum(&spec, ClassicalOptions::default()).unwrap();
            let pruned = classical_optimum(
                &spec,
                ClassicalOptions { prune_symmetry: true, ..Default::default() },
            )
            .unwrap();
            assert_eq!(full.scaled_score, pruned.scaled_score);
            assert_eq!(full.message, pruned.message);
            assert_eq!(full.ties, d as u64 * pruned.ties);
            assert_eq!(full.searched, d as u64 * pruned.searched);
        }
    }

    #[test]
    fn optimum_table_is_lexicographically_smallest() {
        let spec = GameSpec::new(2).unwrap();
        let sol = classical_optimum(&spec, ClassicalOptions::default()).unwrap();
        let mut first = None;
        for code in 0..16usize {
            let table: Vec<usize> = (0..4).map(|i| (code >> (3 - i)) & 1).collect();
            let msg = MessageFunction::new(2, table).unwrap();
            let (score, _) = best_response(&spec, &msg).unwrap();
            if score == sol.scaled_score && first.is_none() {
                first = Some(msg);
            }
        }
        assert_eq!(first.unwrap(), sol.message);
    }

    #[test]
    fn refuses_large_d() {
        let spec = GameSpec::new(7).unwrap();
        assert!(matches!(
            classical_optimum(&spec, ClassicalOptions { allow_heavy: true, ..Default::default() }),
            Err(CoreError::SearchSpaceTooLarge { d: 7, .. })
        ));
        let spec6 = GameSpec::new(6).unwrap();
        assert!(classical_optimum(&spec6, ClassicalOptions::default()).is_err());
    }

    #[test]
    fn linear_strategies() {
        let zero = LinearStrategy { a_map: [0, 0], b_map: [0, 0] };
        for d in [2, 7] {
            let spec = GameSpec::new(d).unwrap();
            assert_eq!(linear_strategy_value(&spec, &zero), half());
        }
        let spec = GameSpec::new(3).unwrap();
        let v = linear_strategy_value(&spec, &LinearStrategy { a_map: [0, 1], b_map: [0, 0] });
        assert!(v <= half());
        // every linear strategy for d = 3 stays within the bound
        for a0 in 0..3 {
            for a1 in 0..3 {
                for b0 in 0..3 {
                    for b1 in 0..3 {
                        let s = LinearStrategy { a_map: [a0, a1], b_map: [b0, b1] };
                        let v = linear_strategy_value(&spec, &s);
                        assert!(v <= half() && v >= -half() - half());
                        let (msg, resp) = linear_strategy_tables(3, &s);
                        let replay = delta_of_deterministic_policy(&spec, |i| {
                            resp.answer(i.x0, i.x1, msg.message(i.y0, i.y1))
                        })
                        .unwrap();
                        assert_eq!(replay, v);
                    }
                }
            }
        }
    }
}
