//! Entangled strategies for the two-setting, d-outcome Bell scenario.
//! The shared state is indexed `i * d + k`, Alice's factor first.

use ccg_numeric::{Complex64, HermitianMatrix, SolverOptions};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{run_restarts, SeesawOptions, SeesawOutcome, SeesawTrace, StartKind};
use crate::error::{CoreError, Result};
use crate::game::{build_cglmp_tensor, event_index, Behavior, CglmpTensor, GameSpec};
use crate::quantum::{optimize_povm, ComplexVec, Povm, PovmData, POVM_TOL};
use crate::seesaw::pm::{frozen_measurements, STATE_TOL};

/// Phases of the second party's canonical bases.
pub const BOB_SHIFTS: [f64; 2] = [0.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone)]
pub struct EntangledStrategy {
    pub d: usize,
    pub state: DVector<Complex64>,
    pub alice: [Povm; 2],
    pub bob: [Povm; 2],
}

impl EntangledStrategy {
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if self.state.len() != d * d {
            return Err(CoreError::DimensionMismatch { expected: d * d, found: self.state.len() });
        }
        if (self.state.norm() - 1.0).abs() > STATE_TOL * d as f64 {
            return Err(CoreError::InvalidStrategy(format!("state norm {}", self.state.norm())));
        }
        for m in self.alice.iter().chain(&self.bob) {
            if m.dim() != d || m.outcomes() != d {
                return Err(CoreError::DimensionMismatch { expected: d, found: m.dim() });
            }
            m.validate(POVM_TOL)?;
        }
        Ok(())
    }

    pub fn maximally_entangled(d: usize) -> DVector<Complex64> {
        let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        DVector::from_fn(d * d, |i, _| if i / d == i % d { amp } else { Complex64::new(0.0, 0.0) })
    }

    fn amplitudes(&self) -> DMatrix<Complex64> {
        state_matrix(self.d, &self.state)
    }
}

/// `Psi[i, k] = psi[i * d + k]`.
fn state_matrix(d: usize, psi: &DVector<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |i, k| psi[i * d + k])
}

/// `sum c_{a,b,x,y} A^x_a (x) B^y_b`.
#[derive(Debug, Clone)]
pub struct BellOperator(pub HermitianMatrix);

impl BellOperator {
    pub fn value(&self, psi: &DVector<Complex64>) -> f64 {
        self.0.expectation(psi)
    }
}

pub fn bell_operator(tensor: &CglmpTensor, alice: &[Povm; 2], bob: &[Povm; 2]) -> Result<BellOperator> {
    let d = tensor.d();
    let mut total = DMatrix::<Complex64>::zeros(d * d, d * d);
    for x in 0..2 {
        for a in 0..d {
            let bsum = weighted_sum(d, |y, b| tensor.coefficient_f64(a, b, x, y), bob);
            total += alice[x].elements()[a].as_matrix().kronecker(&bsum);
        }
    }
    Ok(BellOperator(HermitianMatrix::new(total)?))
}

/// `sum_{s, o} w(s, o) M^s_o`.
fn weighted_sum(d: usize, w: impl Fn(usize, usize) -> f64, povms: &[Povm; 2]) -> DMatrix<Complex64> {
    let mut acc = DMatrix::zeros(d, d);
    for (s, p) in povms.iter().enumerate() {
        for (o, e) in p.elements().iter().enumerate() {
            let c = w(s, o);
            if c != 0.0 {
                acc += e.as_matrix() * Complex64::new(c, 0.0);
            }
        }
    }
    acc
}

/// Born-rule behavior `P(a, b | x, y) = <psi| A^x_a (x) B^y_b |psi>`.
pub fn behavior_of(strat: &EntangledStrategy) -> Result<Behavior> {
    strat.validate()?;
    let d = strat.d;
    let psi = strat.amplitudes();
    let mut probs = vec![0.0; 4 * d * d];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..d {
                let left = strat.alice[x].elements()[a].as_matrix() * &psi;
                for b in 0..d {
                    let bt = strat.bob[y].elements()[b].as_matrix().transpose();
                    let v = &left * bt;
                    probs[event_index(d, a, b, x, y)] = psi.dotc(&v).re;
                }
            }
        }
    }
    Behavior::with_tolerance(d, probs, 10.0 * POVM_TOL)
}

/// Alice uses the frozen prepare-and-measure bases, Bob phases `0, 1/2`
/// with the opposite Fourier sign.
pub fn canonical_bases(d: usize) -> ([Povm; 2], [Povm; 2]) {
    (frozen_measurements(d), BOB_SHIFTS.map(|s| Povm::fourier(d, 1.0, s)))
}

/// Top eigenvector of the Bell operator and its eigenvalue.
pub fn update_state(bell: &BellOperator) -> (f64, DVector<Complex64>) {
    bell.0.top_eigenpair()
}

/// Reduced score operators `F^s_o` of one party for one setting, so that
/// the Bell value is `sum_{s, o} tr(M^s_o F^s_o)`.
pub fn party_scores(tensor: &CglmpTensor, strat: &EntangledStrategy, party: Party, setting: usize) -> Result<Vec<HermitianMatrix>> {
    let d = strat.d;
    let psi = strat.amplitudes();
    (0..d)
        .map(|o| {
            let m = match party {
                Party::Alice => {
                    let bsum = weighted_sum(d, |y, b| tensor.coefficient_f64(o, b, setting, y), &strat.bob);
                    &psi * bsum.transpose() * psi.adjoint()
                }
                Party::Bob => {
                    let asum = weighted_sum(d, |x, a| tensor.coefficient_f64(a, o, x, setting), &strat.alice);
                    psi.transpose() * asum.transpose() * psi.conjugate()
                }
            };
            HermitianMatrix::new(m).map_err(CoreError::from)
        })
        .collect()
}

/// Optimal measurements of one party with everything else fixed, keeping the
/// old measurement for any setting where the solver does not improve it.
/// Returns the new measurements and the resulting Bell value.
pub fn update_party(
    tensor: &CglmpTensor,
    strat: &EntangledStrategy,
    party: Party,
    sdp: &SolverOptions,
) -> Result<([Povm; 2], f64)> {
    let old = match party {
        Party::Alice => &strat.alice,
        Party::Bob => &strat.bob,
    };
    let mut total = 0.0;
    let mut out = Vec::with_capacity(2);
    for (s, o) in old.iter().enumerate() {
        let scores = party_scores(tensor, strat, party, s)?;
        let opt = optimize_povm(&scores, sdp).map_err(|e| match e {
            CoreError::Solver { status, .. } => CoreError::Solver {
                context: format!("{party:?} setting {s}"),
                status,
            },
            e => e,
        })?;
        let prev = o.score(&scores);
        if opt.value >= prev {
            total += opt.value;
            out.push(opt.povm);
        } else {
            total += prev;
            out.push(o.clone());
        }
    }
    let [a, b]: [Povm; 2] = out.try_into().expect("two settings");
    Ok(([a, b], total))
}

fn iterate(
    tensor: &CglmpTensor,
    mut strat: EntangledStrategy,
    opts: &SeesawOptions,
    trace: &mut SeesawTrace,
) -> Result<(f64, EntangledStrategy)> {
    trace
        .objectives
        .push(bell_operator(tensor, &strat.alice, &strat.bob)?.value(&strat.state));
    let mut last = f64::NEG_INFINITY;
    for it in 0..opts.max_iters {
        trace.iterations = it + 1;
        let (v, psi) = update_state(&bell_operator(tensor, &strat.alice, &strat.bob)?);
        strat.state = psi;
        trace.objectives.push(v);
        let (alice, v) = update_party(tensor, &strat, Party::Alice, &opts.sdp)?;
        strat.alice = alice;
        trace.objectives.push(v);
        let (bob, v) = update_party(tensor, &strat, Party::Bob, &opts.sdp)?;
        strat.bob = bob;
        trace.objectives.push(v);
        if (v - last).abs() < opts.conv_tol {
            trace.converged = true;
            break;
        }
        last = v;
    }
    let value = bell_operator(tensor, &strat.alice, &strat.bob)?.value(&strat.state);
    Ok((value, strat))
}

/// Best-of-restarts lower bound on the maximal Bell value.
pub fn run_bell(spec: &GameSpec, opts: &SeesawOptions) -> Result<SeesawOutcome<EntangledStrategy>> {
    let d = spec.d();
    let tensor = build_cglmp_tensor(d)?;
    run_restarts(opts, &[StartKind::Canonical], |trace| {
        let start = match trace.start {
            StartKind::Canonical | StartKind::Classical => {
                let (alice, bob) = canonical_bases(d);
                EntangledStrategy { d, state: EntangledStrategy::maximally_entangled(d), alice, bob }
            }
            StartKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(trace.seed);
                let mut m = || Povm::random_projective(d, &mut rng);
                let alice = [m(), m()];
                let bob = [m(), m()];
                EntangledStrategy { d, state: EntangledStrategy::maximally_entangled(d), alice, bob }
            }
        };
        iterate(&tensor, start, opts, trace)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledStrategyData {
    pub d: usize,
    pub state: ComplexVec,
    pub alice: Vec<PovmData>,
    pub bob: Vec<PovmData>,
}

impl From<&EntangledStrategy> for EntangledStrategyData {
    fn from(s: &EntangledStrategy) -> Self {
        Self {
            d: s.d,
            state: ComplexVec::from(&s.state),
            alice: s.alice.iter().map(PovmData::from).collect(),
            bob: s.bob.iter().map(PovmData::from).collect(),
        }
    }
}

impl EntangledStrategyData {
    pub fn to_strategy(&self) -> Result<EntangledStrategy> {
        let pair = |v: &[PovmData]| -> Result<[Povm; 2]> {
            if v.len() != 2 {
                return Err(CoreError::DimensionMismatch { expected: 2, found: v.len() });
            }
            Ok([v[0].to_povm()?, v[1].to_povm()?])
        };
        let s = EntangledStrategy {
            d: self.d,
            state: self.state.to_vector(),
            alice: pair(&self.alice)?,
            bob: pair(&self.bob)?,
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::cglmp_value;

    #[test]
    fn canonical_top_eigenvalue() {
        for (d, want) in [(2, 0.7071), (3, 0.7287), (7, 0.7694)] {
            let t = build_cglmp_tensor(d).unwrap();
            let (a, b) = canonical_bases(d);
            let (v, _) = update_state(&bell_operator(&t, &a, &b).unwrap());
            assert!((v - want).abs() < 2e-4, "d = {d}: {v}");
        }
    }

    #[test]
    fn product_state_is_deterministic() {
        let d = 2;
        let mut psi = DVector::zeros(4);
        psi[0] = Complex64::new(1.0, 0.0);
        let s = EntangledStrategy {
            d,
            state: psi,
            alice: [Povm::computational(d), Povm::computational(d)],
            bob: [Povm::computational(d), Povm::computational(d)],
        };
        let beh = behavior_of(&s).unwrap();
        assert_eq!(beh, Behavior::deterministic(d, [0, 0], [0, 0]));
        let v = cglmp_value(&build_cglmp_tensor(d).unwrap(), &beh).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reduced_scores_reproduce_bell_value() {
        let d = 3;
        let t = build_cglmp_tensor(d).unwrap();
        let (alice, bob) = canonical_bases(d);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let state = crate::quantum::random_state(d * d, &mut rng);
        let s = EntangledStrategy { d, state, alice, bob };
        let direct = bell_operator(&t, &s.alice, &s.bob).unwrap().value(&s.state);
        let via_beh = cglmp_value(&t, &behavior_of(&s).unwrap()).unwrap();
        assert!((direct - via_beh).abs() < 1e-12);
        for party in [Party::Alice, Party::Bob] {
            let povms = if party == Party::Alice { &s.alice } else { &s.bob };
            let total: f64 = (0..2)
                .map(|x| povms[x].score(&party_scores(&t, &s, party, x).unwrap()))
                .sum();
            assert!((total - direct).abs() < 1e-12, "{party:?}");
        }
    }
}
