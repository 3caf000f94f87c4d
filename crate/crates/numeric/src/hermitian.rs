//! Hermitian matrices and eigenpairs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{NumericError, Result};

/// Complex Hermitian matrix. Construction symmetrizes the input, so the
/// stored matrix is exactly conjugate-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(NumericError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericError::NonFinite);
        }
        let adj = m.adjoint();
        Ok(Self((m + adj).scale(0.5)))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Rank-one projector `|v><v|`.
    pub fn projector(v: &DVector<Complex64>) -> Self {
        Self(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// `<v| H |v>`, real by construction.
    pub fn expectation(&self, v: &DVector<Complex64>) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }

    /// `Re tr(H K)` for another Hermitian `K`.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        // tr(HK) = sum_ij H_ij K_ji = sum_ij H_ij conj(K_ij)
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(h, k)| (h * k.conj()).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute deviation from conjugate symmetry.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn add_scaled(&mut self, other: &HermitianMatrix, s: f64) {
        self.0.zip_apply(&other.0, |a, b| *a += b * s);
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors
    /// (columns), each vector phase-normalized.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), DMatrix::zeros(0, 0));
        }
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(src).into_owned();
            normalize_phase(&mut v);
            vectors.set_column(dst, &v);
        }
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0.first().copied().unwrap_or(0.0)
    }

    /// Maximum eigenvalue and a unit eigenvector for it.
    ///
    /// The vector's first component of non-negligible magnitude is made real
    /// and positive, so the output is deterministic for a fixed input.
    pub fn top_eigenpair(&self) -> (f64, DVector<Complex64>) {
        let n = self.dim();
        let (values, vectors) = self.eigen();
        let mut v = vectors.column(n - 1).into_owned();
        let norm = v.norm();
        v.unscale_mut(norm);
        normalize_phase(&mut v);
        (values[n - 1], v)
    }

    /// Hermitian square root of a PSD matrix (negative eigenvalues clipped).
    pub fn psd_sqrt(&self) -> Self {
        self.spectral_map(|x| x.max(0.0).sqrt())
    }

    /// Inverse square root of a positive-definite matrix.
    pub fn inverse_sqrt(&self) -> Self {
        self.spectral_map(|x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt())
    }

    /// Projection onto the PSD cone.
    pub fn clip_negative(&self) -> Self {
        self.spectral_map(|x| x.max(0.0))
    }

    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let (values, vectors) = self.eigen();
        let n = self.dim();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (k, &lam) in values.iter().enumerate() {
            let fl = f(lam);
            if fl == 0.0 {
                continue;
            }
            let v = vectors.column(k);
            out += (v * v.adjoint()).scale(fl);
        }
        Self(out)
    }
}

/// Makes the first component with magnitude above `1e-9` (relative to the
/// largest) real and positive.
fn normalize_phase(v: &mut DVector<Complex64>) {
    let biggest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if biggest == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-9 * biggest).copied() {
        let phase = z.conj() / z.norm();
        v.apply(|c| *c *= phase);
    }
}

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
///
/// `<embed(H), embed(K)> = 2 Re tr(H K)`, and the spectrum of the embedding
/// is the spectrum of `H` with every eigenvalue doubled in multiplicity.
pub fn embed_hermitian(h: &HermitianMatrix) -> DMatrix<f64> {
    let n = h.dim();
    let m = h.as_matrix();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ri) = (i / n, i % n);
        let (bj, rj) = (j / n, j % n);
        let z = m[(ri, rj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Inverse of [`embed_hermitian`] extended to all real symmetric `2n x 2n`
/// matrices: `((Y11 + Y22) + i (Y21 - Y12)) / 2`.
///
/// This is a linear compression, so a PSD input yields a PSD output, and
/// `<embed(H), Y> = 2 tr(H extract(Y))` for every symmetric `Y`.
pub fn extract_hermitian(y: &DMatrix<f64>) -> HermitianMatrix {
    let n = y.nrows() / 2;
    let m = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (y[(i, j)] + y[(i + n, j + n)]),
            0.5 * (y[(i + n, j)] - y[(i, j + n)]),
        )
    });
    HermitianMatrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_top_eigenpair() {
        let h = HermitianMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(3.0, 0.0),
        ])))
        .unwrap();
        let (lam, v) = h.top_eigenpair();
        assert!((lam - 3.0).abs() < 1e-12);
        assert!((v[2] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(v[0].norm() < 1e-12 && v[1].norm() < 1e-12);
    }

    #[test]
    fn pauli_x_top_eigenpair() {
        let h = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let (lam, v) = h.top_eigenpair();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((lam - 1.0).abs() < 1e-12);
        assert!((v[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((v[1] - c(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.3), c(0.0, 1.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let h = HermitianMatrix::new(m).unwrap();
        assert!(h.hermiticity_residual() < 1e-15);
        assert_eq!(h.as_matrix()[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_element(2, 2, c(f64::NAN, 0.0));
        assert_eq!(HermitianMatrix::new(m), Err(NumericError::NonFinite));
    }

    #[test]
    fn zero_matrix_gives_a_unit_vector() {
        let (lam, v) = HermitianMatrix::zeros(3).top_eigenpair();
        assert_eq!(lam, 0.0);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_round_trip_and_inner_product() {
        let h = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.5, -0.25), c(0.5, 0.25), c(-2.0, 0.0)],
        ))
        .unwrap();
        let k = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.7, 0.0)],
        ))
        .unwrap();
        let eh = embed_hermitian(&h);
        assert!((&extract_hermitian(&eh).0 - &h.0).norm() < 1e-15);
        let ek = embed_hermitian(&k);
        let inner: f64 = eh.iter().zip(ek.iter()).map(|(a, b)| a * b).sum();
        assert!((inner - 2.0 * h.trace_product(&k)).abs() < 1e-12);
    }
}
