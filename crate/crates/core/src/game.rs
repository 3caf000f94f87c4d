//! The game family G_d: payoff coefficients, target functions, the payoff
//! kernel, and the CGLMP coefficient tensor that scores the same game from
//! the Bell side.
//!
//! Payoffs are stored as scaled integers `W_k = (d - 1) c_k = d - 1 - 2k`, so
//! classical scoring is exact; the game value is the total scaled score
//! divided by `4 d^2 (d - 1)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Residue of `v` modulo `d`, for possibly negative `v`.
pub fn modd(v: i64, d: usize) -> usize {
    v.rem_euclid(d as i64) as usize
}

/// Tolerance for the normalization and nonnegativity of [`Behavior`]s.
pub const BEHAVIOR_TOL: f64 = 1e-12;

/// `c_k = 1 - 2k/(d-1)` for `k = 0..floor(d/2)`.
pub fn coefficients(d: usize) -> Result<Vec<BigRational>> {
    if d < 2 {
        return Err(CoreError::InvalidDimension(d));
    }
    let den = BigInt::from(d - 1);
    Ok((0..d / 2)
        .map(|k| BigRational::new(BigInt::from(d as i64 - 1 - 2 * k as i64), den.clone()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    d: usize,
}

impl GameSpec {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(CoreError::InvalidDimension(d));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of scored `k` values, `floor(d/2)`.
    pub fn kmax(&self) -> usize {
        self.d / 2
    }

    pub fn coefficients(&self) -> Vec<BigRational> {
        coefficients(self.d).expect("validated dimension")
    }

    pub fn coefficients_f64(&self) -> Vec<f64> {
        (0..self.kmax())
            .map(|k| self.scaled_weight(k) as f64 / self.scale() as f64)
            .collect()
    }

    /// `d - 1`, the common denominator of the coefficients.
    pub fn scale(&self) -> i64 {
        self.d as i64 - 1
    }

    /// `W_k = (d - 1) c_k = d - 1 - 2k`.
    pub fn scaled_weight(&self, k: usize) -> i64 {
        self.d as i64 - 1 - 2 * k as i64
    }

    /// Divisor turning a total scaled score over all inputs into Delta_d.
    pub fn normalization(&self) -> i64 {
        4 * (self.d * self.d) as i64 * self.scale()
    }

    pub fn num_inputs(&self) -> usize {
        4 * self.d * self.d
    }

    /// All `4 d^2` inputs in the order of [`GameInput::index`].
    pub fn inputs(&self) -> impl Iterator<Item = GameInput> + '_ {
        let d = self.d;
        (0..self.num_inputs()).map(move |i| GameInput::from_index(i, d))
    }

    /// Targets `(f_k, h_k)` for one input.
    pub fn target_values(&self, input: &GameInput, k: usize) -> Result<(usize, usize)> {
        if k >= self.kmax() {
            return Err(CoreError::KOutOfRange { k, kmax: self.kmax() });
        }
        self.check_input(input)?;
        Ok(self.targets_unchecked(input, k))
    }

    pub(crate) fn targets_unchecked(&self, input: &GameInput, k: usize) -> (usize, usize) {
        let base = input.x0 as i64 + input.y0 as i64 - (input.x1 * input.y1) as i64;
        let sign = if (input.x1 + input.y1) % 2 == 0 { 1 } else { -1 };
        let k = k as i64;
        (modd(base - sign * k, self.d), modd(base + sign * (k + 1), self.d))
    }

    pub fn check_input(&self, input: &GameInput) -> Result<()> {
        if input.x0 >= self.d || input.y0 >= self.d || input.x1 > 1 || input.y1 > 1 {
            return Err(CoreError::InputOutOfRange(*input));
        }
        Ok(())
    }

    /// Exact Delta from a total scaled score.
    pub fn delta_from_scaled(&self, scaled: i64) -> BigRational {
        BigRational::new(BigInt::from(scaled), BigInt::from(self.normalization()))
    }
}

/// Inputs `(x0, x1)` for Alice and `(y0, y1)` for Bob; `x0, y0` are residues
/// mod d and `x1, y1` are bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameInput {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl GameInput {
    pub fn new(x0: usize, x1: usize, y0: usize, y1: usize) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// Dense index `((x0 * 2 + x1) * d + y0) * 2 + y1`.
    pub fn index(&self, d: usize) -> usize {
        ((self.x0 * 2 + self.x1) * d + self.y0) * 2 + self.y1
    }

    pub fn from_index(i: usize, d: usize) -> Self {
        let y1 = i % 2;
        let y0 = (i / 2) % d;
        let x1 = (i / (2 * d)) % 2;
        let x0 = i / (4 * d);
        Self { x0, x1, y0, y1 }
    }
}

/// Signed scaled payoff for every `(input, G)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffKernel {
    d: usize,
    /// Row-major: `entries[input.index(d) * d + g]`.
    entries: Vec<i64>,
}

impl PayoffKernel {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn payoff(&self, input: &GameInput, g: usize) -> i64 {
        self.entries[input.index(self.d) * self.d + g]
    }

    pub fn row(&self, input: &GameInput) -> &[i64] {
        let start = input.index(self.d) * self.d;
        &self.entries[start..start + self.d]
    }

    /// `1 / (4 d^2 (d - 1))`.
    pub fn normalization(&self) -> BigRational {
        BigRational::new(
            BigInt::one(),
            BigInt::from(4 * (self.d * self.d) as i64 * (self.d as i64 - 1)),
        )
    }

    /// Mutable access for fault-injection tests of the verifier.
    pub fn entries_mut(&mut self) -> &mut [i64] {
        &mut self.entries
    }

    /// Checks the row invariants: `kmax` entries `+W_k`, `kmax` entries
    /// `-W_k` (one of each per k), zeros elsewhere, and row sum zero.
    pub fn check_row(&self, spec: &GameSpec, input: &GameInput) -> std::result::Result<(), String> {
        let row = self.row(input);
        let sum: i64 = row.iter().sum();
        if sum != 0 {
            return Err(format!("row {input:?} sums to {sum}"));
        }
        for k in 0..spec.kmax() {
            let w = spec.scaled_weight(k);
            let pos = row.iter().filter(|&&v| v == w).count();
            let neg = row.iter().filter(|&&v| v == -w).count();
            if pos != 1 || neg != 1 {
                return Err(format!(
                    "row {input:?}: weight {w} appears {pos} times, -{w} appears {neg} times"
                ));
            }
        }
        let zeros = row.iter().filter(|&&v| v == 0).count();
        let expected = spec.d() - 2 * spec.kmax();
        if zeros != expected {
            return Err(format!("row {input:?}: {zeros} zero entries, expected {expected}"));
        }
        Ok(())
    }
}

/// Builds the kernel; `+W_k` where `G = f_k`, `-W_k` where `G = h_k`.
///
/// The assignment is checked to never hit the same `G` twice.
pub fn build_payoff_kernel(spec: &GameSpec) -> PayoffKernel {
    let d = spec.d();
    let mut entries = vec![0i64; spec.num_inputs() * d];
    let mut assigned = vec![false; d];
    for input in spec.inputs() {
        let base = input.index(d) * d;
        assigned.iter_mut().for_each(|a| *a = false);
        for k in 0..spec.kmax() {
            let (f, h) = spec.targets_unchecked(&input, k);
            assert!(!assigned[f] && !assigned[h], "two payoffs for one output");
            assigned[f] = true;
            assigned[h] = true;
            let w = spec.scaled_weight(k);
            entries[base + f] = w;
            entries[base + h] = -w;
        }
    }
    PayoffKernel { d, entries }
}

/// Index of `P(a, b | x, y)` in the dense behavior/tensor layout.
pub fn event_index(d: usize, a: usize, b: usize, x: usize, y: usize) -> usize {
    ((x * 2 + y) * d + a) * d + b
}

/// CGLMP coefficients `c_{a,b,x,y}` including the overall `1/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct CglmpTensor {
    d: usize,
    coefficients: Vec<BigRational>,
    cached: Vec<f64>,
}

impl CglmpTensor {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coefficient(&self, a: usize, b: usize, x: usize, y: usize) -> &BigRational {
        &self.coefficients[event_index(self.d, a, b, x, y)]
    }

    pub fn coefficient_f64(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.cached[event_index(self.d, a, b, x, y)]
    }

    /// Dense `f64` coefficients in [`event_index`] order.
    pub fn as_f64(&self) -> &[f64] {
        &self.cached
    }

    /// Local (classical) bound in this normalization.
    pub fn classical_bound(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(2))
    }

    /// Exact value on a deterministic local strategy `a = alice[x]`,
    /// `b = bob[y]`.
    pub fn deterministic_value(&self, alice: [usize; 2], bob: [usize; 2]) -> BigRational {
        let mut acc = BigRational::zero();
        for x in 0..2 {
            for y in 0..2 {
                acc += self.coefficient(alice[x], bob[y], x, y);
            }
        }
        acc
    }
}

pub fn build_cglmp_tensor(d: usize) -> Result<CglmpTensor> {
    let spec = GameSpec::new(d)?;
    let coeffs = spec.coefficients();
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let mut c = vec![BigRational::zero(); 4 * d * d];
    let m = |v: i64| modd(v, d);
    for (k, ck) in coeffs.iter().enumerate() {
        let w = ck * &quarter;
        let k = k as i64;
        for a in 0..d {
            let ai = a as i64;
            // (x, y, b) for the rewarded and penalized events, stated as b in
            // terms of a.
            let plus = [
                (0, 1, m(ai + k)),
                (0, 0, m(ai - k)),
                (1, 1, m(ai - k)),
                (1, 0, m(ai + k + 1)),
            ];
            let minus = [
                (0, 1, m(ai - k - 1)),
                (0, 0, m(ai + k + 1)),
                (1, 1, m(ai + k + 1)),
                (1, 0, m(ai - k)),
            ];
            for (x, y, b) in plus {
                c[event_index(d, a, b, x, y)] += &w;
            }
            for (x, y, b) in minus {
                c[event_index(d, a, b, x, y)] -= &w;
            }
        }
    }
    let cached = c.iter().map(rational_to_f64).collect();
    Ok(CglmpTensor {
        d,
        coefficients: c,
        cached,
    })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Conditional distribution `P(a, b | x, y)` with two settings per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    d: usize,
    /// Dense, in [`event_index`] order.
    probabilities: Vec<f64>,
}

impl Behavior {
    pub fn new(d: usize, probabilities: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(d, probabilities, BEHAVIOR_TOL)
    }

    /// As [`Behavior::new`] with a caller-chosen tolerance.
    pub fn with_tolerance(d: usize, probabilities: Vec<f64>, tol: f64) -> Result<Self> {
        if probabilities.len() != 4 * d * d {
            return Err(CoreError::DimensionMismatch {
                expected: 4 * d * d,
                found: probabilities.len(),
            });
        }
        if let Some(&p) = probabilities.iter().find(|p| !p.is_finite() || **p < -tol) {
            return Err(CoreError::InvalidBehavior(format!("entry {p}")));
        }
        for xy in 0..4 {
            let s: f64 = probabilities[xy * d * d..(xy + 1) * d * d].iter().sum();
            if (s - 1.0).abs() > tol * (d * d) as f64 {
                return Err(CoreError::InvalidBehavior(format!(
                    "setting pair {xy} sums to {s}"
                )));
            }
        }
        Ok(Self { d, probabilities })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.probabilities[event_index(self.d, a, b, x, y)]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            d,
            probabilities: vec![1.0 / (d * d) as f64; 4 * d * d],
        }
    }

    /// Deterministic local behavior `a = alice[x]`, `b = bob[y]`.
    pub fn deterministic(d: usize, alice: [usize; 2], bob: [usize; 2]) -> Self {
        let mut probabilities = vec![0.0; 4 * d * d];
        for x in 0..2 {
            for y in 0..2 {
                probabilities[event_index(d, alice[x], bob[y], x, y)] = 1.0;
            }
        }
        Self { d, probabilities }
    }
}

/// `I_d = sum c_{a,b,x,y} P(a, b | x, y)`.
pub fn cglmp_value(tensor: &CglmpTensor, beh: &Behavior) -> Result<f64> {
    if tensor.d() != beh.d() {
        return Err(CoreError::DimensionMismatch {
            expected: tensor.d(),
            found: beh.d(),
        });
    }
    Ok(tensor
        .as_f64()
        .iter()
        .zip(beh.probabilities())
        .map(|(c, p)| c * p)
        .sum())
}

/// Delta_d of the entanglement-assisted protocol driven by `beh`.
///
/// Alice measures setting `x = x1`, Bob measures `y = 1 - y1` and sends
/// `m = y0 - b mod d`; Alice answers `G = x0 + m + a mod d`. The result is
/// scored on the payoff kernel, never on the CGLMP tensor, so agreement with
/// [`cglmp_value`] is a genuine identity check.
pub fn game_value_of_behavior(spec: &GameSpec, beh: &Behavior) -> Result<f64> {
    let d = spec.d();
    if beh.d() != d {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            found: beh.d(),
        });
    }
    let kernel = build_payoff_kernel(spec);
    let mut total = 0.0;
    for input in spec.inputs() {
        let (x, y) = (input.x1, 1 - input.y1);
        let row = kernel.row(&input);
        for a in 0..d {
            for b in 0..d {
                let p = beh.p(a, b, x, y);
                if p == 0.0 {
                    continue;
                }
                let m = modd(input.y0 as i64 - b as i64, d);
                let g = (input.x0 + m + a) % d;
                total += p * row[g] as f64;
            }
        }
    }
    Ok(total / spec.normalization() as f64)
}

/// Delta_d of a randomized output policy: `policy(input)` is a distribution
/// over `G`.
pub fn delta_of_output_policy<F>(spec: &GameSpec, mut policy: F) -> Result<f64>
where
    F: FnMut(&GameInput) -> Vec<f64>,
{
    let d = spec.d();
    let kernel = build_payoff_kernel(spec);
    let mut total = 0.0;
    for input in spec.inputs() {
        let dist = policy(&input);
        if dist.len() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                found: dist.len(),
            });
        }
        let s: f64 = dist.iter().sum();
        if (s - 1.0).abs() > 1e-9 || dist.iter().any(|p| *p < -1e-12 || !p.is_finite()) {
            return Err(CoreError::UnnormalizedPolicy { input, sum: s });
        }
        total += dist
            .iter()
            .zip(kernel.row(&input))
            .map(|(p, w)| p * *w as f64)
            .sum::<f64>();
    }
    Ok(total / spec.normalization() as f64)
}

/// Exact Delta_d of a deterministic output policy.
pub fn delta_of_deterministic_policy<F>(spec: &GameSpec, mut policy: F) -> Result<BigRational>
where
    F: FnMut(&GameInput) -> usize,
{
    let kernel = build_payoff_kernel(spec);
    let mut total = 0i64;
    for input in spec.inputs() {
        let g = policy(&input);
        if g >= spec.d() {
            return Err(CoreError::OutputOutOfRange { g, d: spec.d() });
        }
        total += kernel.payoff(&input, g);
    }
    Ok(spec.delta_from_scaled(total))
}

/// `G = x0 + y0 - b(y1) + a(x1) mod d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearStrategy {
    pub a_map: [usize; 2],
    pub b_map: [usize; 2],
}

impl LinearStrategy {
    pub fn output(&self, d: usize, input: &GameInput) -> usize {
        modd(
            input.x0 as i64 + input.y0 as i64 - self.b_map[input.y1] as i64
                + self.a_map[input.x1] as i64,
            d,
        )
    }

    /// Bob's message `m = y0 - b(y1)`.
    pub fn message(&self, d: usize, y0: usize, y1: usize) -> usize {
        modd(y0 as i64 - self.b_map[y1] as i64, d)
    }
}
