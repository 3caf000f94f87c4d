//! Measurements, canonical Fourier-type bases, random sampling and the
//! measurement-optimization SDP shared by both see-saw engines.

use std::f64::consts::PI;

use ccg_numeric::{
    embed_hermitian, extract_hermitian, solve_sdp, Complex64, HermitianMatrix, SdpProblem,
    SdpStatus, Sense, SolverOptions, SparseSymMatrix,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Completeness and positivity tolerance for accepted measurements.
pub const POVM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    /// Validated measurement: every element PSD and the sum equal to identity,
    /// both within [`POVM_TOL`].
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let p = Self { elements };
        p.validate(POVM_TOL)?;
        Ok(p)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let Some(first) = self.elements.first() else {
            return Err(CoreError::InvalidStrategy("measurement without outcomes".into()));
        };
        let d = first.dim();
        if self.elements.iter().any(|e| e.dim() != d) {
            return Err(CoreError::InvalidStrategy("measurement elements differ in size".into()));
        }
        let neg = self.min_eigenvalue();
        if neg < -tol {
            return Err(CoreError::InvalidStrategy(format!(
                "measurement element has eigenvalue {neg:e}"
            )));
        }
        let res = self.completeness_residual();
        if res > tol {
            return Err(CoreError::InvalidStrategy(format!(
                "measurement elements sum to identity only within {res:e}"
            )));
        }
        Ok(())
    }

    /// Projective measurement onto the columns of `basis`.
    pub fn from_basis(basis: &DMatrix<Complex64>) -> Result<Self> {
        let elements = basis
            .column_iter()
            .map(|c| HermitianMatrix::projector(&c.into_owned()))
            .collect();
        Self::new(elements)
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&DMatrix::identity(d, d)).expect("identity columns are a basis")
    }

    /// Elements `|v_j><v_j|` with `v_j[l] = w^(l (sign j + shift)) / sqrt(d)`,
    /// `w = exp(2 pi i / d)`.
    pub fn fourier(d: usize, sign: f64, shift: f64) -> Self {
        Self::from_basis(&fourier_basis(d, sign, shift)).expect("Fourier columns are orthonormal")
    }

    pub fn random_projective<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self::from_basis(&random_unitary(d, rng)).expect("unitary columns are orthonormal")
    }

    /// Projects arbitrary Hermitian elements back onto a measurement: negative
    /// eigenvalues are clipped and the result is conjugated by `T^(-1/2)`,
    /// `T` the sum of the clipped elements.
    pub fn repaired(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let d = elements.first().map(|e| e.dim()).unwrap_or(0);
        let clipped: Vec<HermitianMatrix> = elements.iter().map(|e| e.clip_negative()).collect();
        let mut total = HermitianMatrix::zeros(d);
        for e in &clipped {
            total.add_scaled(e, 1.0);
        }
        if total.min_eigenvalue() <= 1e-12 {
            return Err(CoreError::InvalidStrategy("measurement sum is singular".into()));
        }
        let t = total.inverse_sqrt();
        let elements = clipped
            .iter()
            .map(|e| {
                let m = t.as_matrix() * e.as_matrix() * t.as_matrix();
                HermitianMatrix::new(m).map_err(CoreError::from)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn probabilities(&self, psi: &DVector<Complex64>) -> Vec<f64> {
        self.elements.iter().map(|e| e.expectation(psi)).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.min_eigenvalue())
            .fold(f64::INFINITY, f64::min)
    }

    /// Frobenius norm of `sum_a M_a - I`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut total = HermitianMatrix::identity(d).scale(-1.0);
        for e in &self.elements {
            total.add_scaled(e, 1.0);
        }
        total.frobenius_norm()
    }

    /// `max_a ||M_a^2 - M_a||_F`.
    pub fn projectivity_residual(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| {
                let m = e.as_matrix();
                (m * m - m).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `sum_a tr(M_a F_a)`.
    pub fn score(&self, scores: &[HermitianMatrix]) -> f64 {
        self.elements
            .iter()
            .zip(scores)
            .map(|(m, f)| m.trace_product(f))
            .sum()
    }
}

/// Columns `v_j[l] = w^(l (sign j + shift)) / sqrt(d)`.
pub fn fourier_basis(d: usize, sign: f64, shift: f64) -> DMatrix<Complex64> {
    let norm = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |l, j| {
        let phase = 2.0 * PI * l as f64 * (sign * j as f64 + shift) / d as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).apply(|z| *z *= phase);
    }
    q
}

/// Haar-random unit vector.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Complex vector as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexVec(pub Vec<[f64; 2]>);

impl From<&DVector<Complex64>> for ComplexVec {
    fn from(v: &DVector<Complex64>) -> Self {
        Self(v.iter().map(|z| [z.re, z.im]).collect())
    }
}

impl ComplexVec {
    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|p| Complex64::new(p[0], p[1])))
    }
}

/// Complex square matrix, row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&HermitianMatrix> for ComplexMatrix {
    fn from(h: &HermitianMatrix) -> Self {
        let m = h.as_matrix();
        let dim = m.nrows();
        let entries = (0..dim * dim)
            .map(|i| {
                let z = m[(i / dim, i % dim)];
                [z.re, z.im]
            })
            .collect();
        Self { dim, entries }
    }
}

impl ComplexMatrix {
    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        if self.entries.len() != self.dim * self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim * self.dim,
                found: self.entries.len(),
            });
        }
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let p = self.entries[i * self.dim + j];
            Complex64::new(p[0], p[1])
        });
        let h = HermitianMatrix::new(m.clone())?;
        if (h.as_matrix() - m).norm() > POVM_TOL {
            return Err(CoreError::InvalidStrategy("matrix is not Hermitian".into()));
        }
        Ok(h)
    }
}

/// Serialized measurement: one matrix per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PovmData(pub Vec<ComplexMatrix>);

impl From<&Povm> for PovmData {
    fn from(p: &Povm) -> Self {
        Self(p.elements().iter().map(ComplexMatrix::from).collect())
    }
}

impl PovmData {
    pub fn to_povm(&self) -> Result<Povm> {
        Povm::new(self.0.iter().map(|m| m.to_hermitian()).collect::<Result<_>>()?)
    }
}

#[derive(Debug, Clone)]
pub struct PovmOptimum {
    pub povm: Povm,
    /// `sum_a tr(M_a F_a)` of the repaired measurement.
    pub value: f64,
    /// Solver's dual objective, an upper bound up to solver tolerance.
    pub bound: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

/// `max sum_a tr(M_a F_a)` over measurements with `scores.len()` outcomes,
/// solved as a real SDP through the symmetric embedding.
pub fn optimize_povm(scores: &[HermitianMatrix], opts: &SolverOptions) -> Result<PovmOptimum> {
    let n = scores.len();
    let d = scores.first().map(|f| f.dim()).unwrap_or(0);
    if n == 0 || scores.iter().any(|f| f.dim() != d) {
        return Err(CoreError::DimensionMismatch { expected: d, found: 0 });
    }
    let mut p = SdpProblem::new(vec![2 * d; n], Sense::Maximize);
    for (a, f) in scores.iter().enumerate() {
        p.objective.add_dense(a, &embed_hermitian(f), 0.5);
    }
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let ihalf = Complex64::new(0.0, 0.5);
    for r in 0..d {
        for c in r..d {
            let mut parts = vec![];
            let mut re = DMatrix::zeros(d, d);
            if r == c {
                re[(r, r)] = one;
            } else {
                re[(r, c)] = half;
                re[(c, r)] = half;
                let mut im = DMatrix::zeros(d, d);
                im[(r, c)] = ihalf;
                im[(c, r)] = -ihalf;
                parts.push((im, 0.0));
            }
            parts.push((re, if r == c { 1.0 } else { 0.0 }));
            for (h, rhs) in parts {
                let e = embed_hermitian(&HermitianMatrix::new(h)?);
                let mut a = SparseSymMatrix::new();
                for block in 0..n {
                    a.add_dense(block, &e, 0.5);
                }
                p.add_constraint(a, rhs);
            }
        }
    }
    let sol = solve_sdp(&p, opts)?;
    if sol.status.is_infeasible() || sol.status == SdpStatus::Stalled {
        return Err(CoreError::Solver {
            context: format!("measurement update, d = {d}"),
            status: format!("{:?}", sol.status),
        });
    }
    let elements = sol.x.blocks.iter().map(extract_hermitian).collect();
    let povm = Povm::repaired(elements)?;
    Ok(PovmOptimum {
        value: povm.score(scores),
        povm,
        bound: sol.dual_obj,
        status: sol.status,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fourier_bases_are_measurements() {
        for d in 2..=6 {
            for (sign, shift) in [(-1.0, 0.25), (-1.0, -0.25), (1.0, 0.0), (1.0, 0.5)] {
                let p = Povm::fourier(d, sign, shift);
                assert!(p.completeness_residual() < 1e-12);
                assert!(p.projectivity_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(5, &mut rng);
        let e = u.adjoint() * &u - DMatrix::<Complex64>::identity(5, 5);
        assert!(e.norm() < 1e-12);
        let v = random_state(4, &mut rng);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repair_restores_completeness() {
        let mut els: Vec<HermitianMatrix> = Povm::computational(3).elements().to_vec();
        els[0] = els[0].scale(1.2);
        let p = Povm::repaired(els).unwrap();
        assert!(p.completeness_residual() < 1e-12);
        assert!(p.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn rejects_incomplete() {
        let els = vec![HermitianMatrix::identity(2).scale(0.4); 2];
        assert!(Povm::new(els).is_err());
    }

    #[test]
    fn povm_sdp_picks_eigenprojectors() {
        // Two outcomes scoring +Z and -Z: optimum is sum of |eigenvalues| = 2.
        let z = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
        ))
        .unwrap();
        let scores = vec![z.clone(), z.scale(-1.0)];
        let opt = optimize_povm(&scores, &SolverOptions::default()).unwrap();
        assert!((opt.value - 2.0).abs() < 1e-7, "{}", opt.value);
        assert!((opt.bound - 2.0).abs() < 1e-6);
    }

    #[test]
    fn povm_sdp_complex_scores() {
        // For F_0 = H, F_1 = 0 the optimum is the positive part trace of H.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(3, &mut rng);
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.5, 0.0),
            Complex64::new(-0.7, 0.0),
            Complex64::new(0.4, 0.0),
        ]));
        let h = HermitianMatrix::new(&u * diag * u.adjoint()).unwrap();
        let opt = optimize_povm(&[h, HermitianMatrix::zeros(3)], &SolverOptions::default()).unwrap();
        assert!((opt.value - 1.9).abs() < 1e-7, "{}", opt.value);
    }

    #[test]
    fn serde_round_trip() {
        let p = Povm::fourier(3, 1.0, 0.5);
        let data = PovmData::from(&p);
        let json = serde_json::to_string(&data).unwrap();
        let back: PovmData = serde_json::from_str(&json).unwrap();
        let q = back.to_povm().unwrap();
        for (a, b) in p.elements().iter().zip(q.elements()) {
            assert!((a.as_matrix() - b.as_matrix()).norm() < 1e-15);
        }
    }
}
