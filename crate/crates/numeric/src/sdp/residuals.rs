use super::problem::{SdpProblem, Sense};
use super::solver::SdpSolution;
use crate::error::{NumericError, Result};

/// Feasibility and optimality measures recomputed from the problem data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `||A(X) - b||_2 / (1 + ||b||_2)`
    pub primal: f64,
    /// Max absolute constraint violation.
    pub primal_max_abs: f64,
    /// `||C - A^T y + S||_F / (1 + ||C||_F)` for minimization,
    /// `||A^T y - S - C||_F / (1 + ||C||_F)` for maximization.
    pub dual: f64,
    pub min_eig_x: f64,
    pub min_eig_s: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `|primal - dual| / (1 + |primal|)`
    pub gap: f64,
}

impl ResidualReport {
    /// All measures within `tol`, with PSD-ness checked at `psd_tol`.
    pub fn within(&self, tol: f64, psd_tol: f64) -> bool {
        self.primal <= tol
            && self.dual <= tol
            && self.gap <= tol
            && self.min_eig_x >= -psd_tol
            && self.min_eig_s >= -psd_tol
    }
}

/// Recomputes residuals from scratch; nothing from the solver's internal
/// scaled state is reused.
pub fn residuals(p: &SdpProblem, s: &SdpSolution) -> Result<ResidualReport> {
    if s.x.sizes() != p.blocks || s.s.sizes() != p.blocks {
        return Err(NumericError::ShapeMismatch(format!(
            "solution blocks {:?} vs problem blocks {:?}",
            s.x.sizes(),
            p.blocks
        )));
    }
    if s.y.len() != p.constraints.len() {
        return Err(NumericError::ShapeMismatch(format!(
            "{} multipliers for {} constraints",
            s.y.len(),
            p.constraints.len()
        )));
    }
    let ax = p.apply(&s.x);
    let mut sq = 0.0;
    let mut max_abs = 0.0f64;
    let mut b_sq = 0.0;
    for (c, v) in p.constraints.iter().zip(&ax) {
        let r = v - c.b;
        sq += r * r;
        max_abs = max_abs.max(r.abs());
        b_sq += c.b * c.b;
    }
    let c = p.objective.to_dense(&p.blocks);
    let mut rd = p.apply_adjoint(&s.y);
    match p.sense {
        Sense::Minimize => {
            rd.axpy(1.0, &s.s);
            rd.axpy(-1.0, &c);
        }
        Sense::Maximize => {
            rd.axpy(-1.0, &s.s);
            rd.axpy(-1.0, &c);
        }
    }
    let primal_obj = c.inner(&s.x);
    let dual_obj: f64 = p.constraints.iter().zip(&s.y).map(|(c, y)| c.b * y).sum();
    Ok(ResidualReport {
        primal: sq.sqrt() / (1.0 + b_sq.sqrt()),
        primal_max_abs: max_abs,
        dual: rd.frobenius_norm() / (1.0 + c.frobenius_norm()),
        min_eig_x: s.x.min_eigenvalue(),
        min_eig_s: s.s.min_eigenvalue(),
        primal_obj,
        dual_obj,
        gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs()),
    })
}
