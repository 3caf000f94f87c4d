//! Moment-matrix relaxations of the quantum set for two settings and d
//! outcomes per party: level 1 and the intermediate level 1+AB.
//!
//! Projectors for the last outcome are eliminated through completeness, so
//! the operator symbols carry outcomes `0..d-1` exclusive. The relaxation
//! is posed in LMI form `Gamma(v) >= 0` over the free moments `v`, plus the
//! nonnegativity of every `P(a, b | x, y)` (including eliminated outcomes),
//! and handed to the solver as the dual of a standard-form program.

use std::collections::HashMap;
use std::fmt;

use ccg_numeric::{residuals, solve_sdp, ResidualReport, SdpProblem, SdpStatus, Sense, SolverOptions, SparseSymMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::game::{build_cglmp_tensor, CglmpTensor};
use crate::seesaw::EntangledStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "1+AB")]
    OneAB,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::One => "1",
            Level::OneAB => "1+AB",
        })
    }
}

impl std::str::FromStr for Level {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" => Ok(Level::One),
            "1+ab" => Ok(Level::OneAB),
            _ => Err(CoreError::UnsupportedLevel(s.into())),
        }
    }
}

/// Projector for setting `setting`, outcome `outcome < d - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub setting: usize,
    pub outcome: usize,
}

/// Operator word: Alice's symbols followed by Bob's.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Monomial {
    pub a_word: Vec<Symbol>,
    pub b_word: Vec<Symbol>,
}

impl Monomial {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn alice(setting: usize, outcome: usize) -> Self {
        Self { a_word: vec![Symbol { setting, outcome }], b_word: vec![] }
    }

    pub fn bob(setting: usize, outcome: usize) -> Self {
        Self { a_word: vec![], b_word: vec![Symbol { setting, outcome }] }
    }

    pub fn is_identity(&self) -> bool {
        self.a_word.is_empty() && self.b_word.is_empty()
    }

    fn reversed(&self) -> Self {
        let mut r = self.clone();
        r.a_word.reverse();
        r.b_word.reverse();
        r
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        for s in &self.a_word {
            write!(f, "A{}_{}", s.setting, s.outcome)?;
        }
        for s in &self.b_word {
            write!(f, "B{}_{}", s.setting, s.outcome)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Canonical {
    Zero,
    Word(Monomial),
}

/// Applies `PP = P` and `P_a P_a' = 0` (same setting, `a != a'`) to adjacent
/// symbols until none apply. `None` means the product vanishes.
fn reduce(word: Vec<Symbol>) -> Option<Vec<Symbol>> {
    let mut out: Vec<Symbol> = Vec::with_capacity(word.len());
    for s in word {
        match out.last() {
            Some(t) if t.setting == s.setting => {
                if t.outcome != s.outcome {
                    return None;
                }
            }
            _ => out.push(s),
        }
    }
    Some(out)
}

/// Canonical form of `m1^dagger m2`, with each word identified with its
/// reversal (the smaller of the two is kept).
pub fn canonicalize(m1: &Monomial, m2: &Monomial) -> Canonical {
    let join = |w1: &[Symbol], w2: &[Symbol]| {
        let mut w: Vec<Symbol> = w1.iter().rev().copied().collect();
        w.extend_from_slice(w2);
        reduce(w)
    };
    let (Some(a_word), Some(b_word)) = (join(&m1.a_word, &m2.a_word), join(&m1.b_word, &m2.b_word)) else {
        return Canonical::Zero;
    };
    let m = Monomial { a_word, b_word };
    let r = m.reversed();
    Canonical::Word(if r < m { r } else { m })
}

pub fn monomial_basis(d: usize, level: Level) -> Result<Vec<Monomial>> {
    if d < 2 {
        return Err(CoreError::InvalidDimension(d));
    }
    let mut basis = vec![Monomial::identity()];
    for x in 0..2 {
        for a in 0..d - 1 {
            basis.push(Monomial::alice(x, a));
        }
    }
    for y in 0..2 {
        for b in 0..d - 1 {
            basis.push(Monomial::bob(y, b));
        }
    }
    if level == Level::OneAB {
        for x in 0..2 {
            for a in 0..d - 1 {
                for y in 0..2 {
                    for b in 0..d - 1 {
                        basis.push(Monomial {
                            a_word: vec![Symbol { setting: x, outcome: a }],
                            b_word: vec![Symbol { setting: y, outcome: b }],
                        });
                    }
                }
            }
        }
    }
    Ok(basis)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Zero,
    One,
    Var(usize),
}

/// `constant + sum coef * v[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(k, c)| c * v[*k]).sum::<f64>()
    }

    fn add(&mut self, e: Entry, c: f64) {
        match e {
            Entry::Zero => {}
            Entry::One => self.constant += c,
            Entry::Var(k) => self.terms.push((k, c)),
        }
    }

    fn compact(&mut self) {
        let mut m: HashMap<usize, f64> = HashMap::new();
        for (k, c) in self.terms.drain(..) {
            *m.entry(k).or_insert(0.0) += c;
        }
        self.terms = m.into_iter().filter(|(_, c)| *c != 0.0).collect();
        self.terms.sort_by_key(|t| t.0);
    }
}

#[derive(Debug, Clone)]
pub struct MomentProblem {
    pub d: usize,
    pub level: Level,
    pub basis: Vec<Monomial>,
    /// Free moment words, in variable order.
    pub words: Vec<Monomial>,
    pub index: HashMap<Monomial, usize>,
    /// `entries[i][j]`, moment of `basis[i]^dagger basis[j]`.
    pub entries: Vec<Vec<Entry>>,
    pub objective: Affine,
    /// `P(a, b | x, y)` for every event, in event order.
    pub probabilities: Vec<Affine>,
}

impl MomentProblem {
    pub fn psd_size(&self) -> usize {
        self.basis.len()
    }

    pub fn num_variables(&self) -> usize {
        self.words.len()
    }

    fn entry_of(&self, w: &Canonical) -> Entry {
        match w {
            Canonical::Zero => Entry::Zero,
            Canonical::Word(m) if m.is_identity() => Entry::One,
            Canonical::Word(m) => Entry::Var(self.index[m]),
        }
    }

    pub fn moment_matrix(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.psd_size();
        DMatrix::from_fn(n, n, |i, j| match self.entries[i][j] {
            Entry::Zero => 0.0,
            Entry::One => 1.0,
            Entry::Var(k) => v[k],
        })
    }

    /// Real parts of the moments of an explicit strategy. Only meaningful for
    /// projective measurements.
    pub fn moment_vector(&self, strat: &EntangledStrategy) -> Result<Vec<f64>> {
        strat.validate()?;
        if strat.d != self.d {
            return Err(CoreError::DimensionMismatch { expected: self.d, found: strat.d });
        }
        let d = self.d;
        let product = |word: &[Symbol], povms: &[crate::quantum::Povm; 2]| {
            let mut m = DMatrix::<ccg_numeric::Complex64>::identity(d, d);
            for s in word {
                m *= povms[s.setting].elements()[s.outcome].as_matrix();
            }
            m
        };
        Ok(self
            .words
            .iter()
            .map(|w| {
                let op = product(&w.a_word, &strat.alice).kronecker(&product(&w.b_word, &strat.bob));
                strat.state.dotc(&(op * &strat.state)).re
            })
            .collect())
    }
}

/// Builds the relaxation and its standard-form program: `min <C, X>` with
/// `C = Gamma_0`, `A_k = -Gamma_k`, `b_k` the objective coefficient of moment
/// `k`. The program's optimum plus `objective.constant` bounds the CGLMP
/// value from above.
pub fn build_moment_problem(d: usize, level: Level) -> Result<(MomentProblem, SdpProblem)> {
    let tensor = build_cglmp_tensor(d)?;
    let basis = monomial_basis(d, level)?;
    let n = basis.len();
    let mut words = Vec::new();
    let mut index = HashMap::new();
    let mut canon = vec![vec![Canonical::Zero; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = canonicalize(&basis[i], &basis[j]);
            if let Canonical::Word(m) = &c {
                if !m.is_identity() && !index.contains_key(m) {
                    index.insert(m.clone(), words.len());
                    words.push(m.clone());
                }
            }
            canon[j][i] = c.clone();
            canon[i][j] = c;
        }
    }
    let mut mp = MomentProblem {
        d,
        level,
        basis,
        words,
        index,
        entries: vec![],
        objective: Affine::default(),
        probabilities: vec![],
    };
    mp.entries = canon.iter().map(|row| row.iter().map(|c| mp.entry_of(c)).collect()).collect();
    mp.probabilities = event_probabilities(&mp, &tensor);
    let mut objective = Affine::default();
    for (p, c) in mp.probabilities.iter().zip(tensor.as_f64()) {
        if *c != 0.0 {
            objective.constant += c * p.constant;
            objective.terms.extend(p.terms.iter().map(|(k, v)| (*k, c * v)));
        }
    }
    objective.compact();
    mp.objective = objective;

    let m = mp.num_variables();
    let mut blocks = vec![n];
    blocks.extend(std::iter::repeat_n(1, mp.probabilities.len()));
    let mut sdp = SdpProblem::new(blocks, Sense::Minimize);
    let mut rows: Vec<SparseSymMatrix> = vec![SparseSymMatrix::new(); m];
    for i in 0..n {
        for j in i..n {
            match mp.entries[i][j] {
                Entry::Zero => {}
                Entry::One => sdp.objective.add(0, i, j, 1.0),
                Entry::Var(k) => rows[k].add(0, i, j, -1.0),
            }
        }
    }
    for (e, p) in mp.probabilities.iter().enumerate() {
        sdp.objective.add(1 + e, 0, 0, p.constant);
        for (k, c) in &p.terms {
            rows[*k].add(1 + e, 0, 0, -c);
        }
    }
    let mut b = vec![0.0; m];
    for (k, c) in &mp.objective.terms {
        b[*k] = *c;
    }
    for (mut a, bk) in rows.into_iter().zip(b) {
        a.compact();
        sdp.add_constraint(a, bk);
    }
    Ok((mp, sdp))
}

/// `P(a, b | x, y)` as affine functions of the moments, with
/// `A^x_{d-1} = 1 - sum_a A^x_a` and likewise for Bob.
fn event_probabilities(mp: &MomentProblem, tensor: &CglmpTensor) -> Vec<Affine> {
    let d = mp.d;
    let expand = |setting: usize, outcome: usize| -> Vec<(Option<Symbol>, f64)> {
        if outcome < d - 1 {
            vec![(Some(Symbol { setting, outcome }), 1.0)]
        } else {
            let mut v = vec![(None, 1.0)];
            v.extend((0..d - 1).map(|o| (Some(Symbol { setting, outcome: o }), -1.0)));
            v
        }
    };
    let mut out = vec![Affine::default(); tensor.as_f64().len()];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..d {
                for b in 0..d {
                    let mut p = Affine::default();
                    for (sa, ca) in expand(x, a) {
                        for (sb, cb) in expand(y, b) {
                            let m = Monomial { a_word: sa.into_iter().collect(), b_word: sb.into_iter().collect() };
                            let c = canonicalize(&Monomial::identity(), &m);
                            p.add(mp.entry_of(&c), ca * cb);
                        }
                    }
                    p.compact();
                    out[crate::game::event_index(d, a, b, x, y)] = p;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub d: usize,
    pub level: Level,
    /// Solver optimum: the upper bound up to solver tolerance.
    pub value: f64,
    /// `value` plus the worst-case effect of the certificate's residuals;
    /// valid because every moment lies in `[-1, 1]`.
    pub rigorous: f64,
    pub lower_value: f64,
    #[serde(skip)]
    pub status: SdpStatus,
    pub status_name: String,
    pub iterations: usize,
    pub psd_size: usize,
    pub num_variables: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub min_eig_certificate: f64,
}

/// Largest `d` for the 1+AB level without the heavy flag.
pub const ONE_AB_MAX_D: usize = 5;

pub fn upper_bound(d: usize, level: Level, opts: &SolverOptions) -> Result<BoundReport> {
    let (mp, sdp) = build_moment_problem(d, level)?;
    let sol = solve_sdp(&sdp, opts)?;
    if !matches!(sol.status, SdpStatus::Optimal | SdpStatus::MaxIterations) {
        return Err(CoreError::Solver {
            context: format!("level {level} relaxation, d = {d}"),
            status: format!("{:?}", sol.status),
        });
    }
    let rep: ResidualReport = residuals(&sdp, &sol)?;
    let value = sol.primal_obj + mp.objective.constant;
    let violation: f64 = sdp
        .apply(&sol.x)
        .iter()
        .zip(&sdp.constraints)
        .map(|(ax, c)| (ax - c.b).abs())
        .sum();
    let trace_bound = (mp.psd_size() + mp.probabilities.len()) as f64;
    let rigorous = value + violation + (-rep.min_eig_x).max(0.0) * trace_bound;
    Ok(BoundReport {
        d,
        level,
        value,
        rigorous,
        lower_value: sol.dual_obj + mp.objective.constant,
        status: sol.status,
        status_name: format!("{:?}", sol.status),
        iterations: sol.iterations,
        psd_size: mp.psd_size(),
        num_variables: mp.num_variables(),
        primal_residual: rep.primal,
        dual_residual: rep.dual,
        gap: rep.gap,
        min_eig_certificate: rep.min_eig_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(x: usize, o: usize) -> Monomial {
        Monomial::alice(x, o)
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(monomial_basis(3, Level::One).unwrap().len(), 9);
        assert_eq!(monomial_basis(3, Level::OneAB).unwrap().len(), 25);
        assert_eq!(monomial_basis(7, Level::One).unwrap().len(), 25);
        assert_eq!(monomial_basis(2, Level::One).unwrap().len(), 5);
    }

    #[test]
    fn canonical_rules() {
        assert_eq!(canonicalize(&a(0, 0), &a(0, 0)), Canonical::Word(a(0, 0)));
        assert_eq!(canonicalize(&a(0, 0), &a(0, 1)), Canonical::Zero);
        let ab = Monomial {
            a_word: vec![Symbol { setting: 0, outcome: 0 }],
            b_word: vec![Symbol { setting: 1, outcome: 2 }],
        };
        assert_eq!(canonicalize(&a(0, 0), &Monomial::bob(1, 2)), Canonical::Word(ab));
        // A1 A0 and A0 A1 are the same real moment
        assert_eq!(canonicalize(&a(0, 0), &a(1, 0)), canonicalize(&a(1, 0), &a(0, 0)));
        assert_eq!(canonicalize(&Monomial::identity(), &Monomial::identity()), Canonical::Word(Monomial::identity()));
    }

    #[test]
    fn longer_words_reduce() {
        let m1 = Monomial {
            a_word: vec![Symbol { setting: 0, outcome: 1 }],
            b_word: vec![Symbol { setting: 0, outcome: 0 }],
        };
        let m2 = Monomial {
            a_word: vec![Symbol { setting: 0, outcome: 1 }],
            b_word: vec![Symbol { setting: 1, outcome: 0 }],
        };
        match canonicalize(&m1, &m2) {
            Canonical::Word(w) => {
                assert_eq!(w.a_word.len(), 1);
                assert_eq!(w.b_word.len(), 2);
            }
            Canonical::Zero => panic!("nonzero product"),
        }
    }

    #[test]
    fn d2_level1_shape() {
        let (mp, sdp) = build_moment_problem(2, Level::One).unwrap();
        assert_eq!(mp.psd_size(), 5);
        let ones = mp.entries.iter().flatten().filter(|e| **e == Entry::One).count();
        assert_eq!(ones, 1);
        assert_eq!(sdp.blocks[0], 5);
        assert_eq!(sdp.blocks.len(), 1 + 16);
    }

    #[test]
    fn level1_values() {
        for (d, want) in [(2, 0.7071), (3, 0.7887)] {
            let r = upper_bound(d, Level::One, &SolverOptions::default()).unwrap();
            assert!((r.value - want).abs() < 1e-3, "d = {d}: {}", r.value);
            assert!(r.rigorous >= r.value);
            assert!(r.rigorous - r.value < 1e-6);
        }
    }
}
