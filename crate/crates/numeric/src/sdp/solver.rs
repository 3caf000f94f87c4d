//! Infeasible primal-dual path-following method with the HKM search
//! direction and a Mehrotra predictor-corrector step.

use std::collections::BTreeMap;

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector};

use super::problem::{min_sym_eigenvalue, BlockMatrix, SdpProblem, Sense};
use crate::error::Result;

/// Certificate thresholds for declaring infeasibility: the ray
/// `(y, S) / b'y` (or `X / -<C,X>`) must have a residual below this.
pub const INFEASIBILITY_TOL: f64 = 1e-8;
/// Rows whose Gram-Schmidt residual norm falls below this fraction of their
/// own norm are treated as linearly dependent and dropped.
pub const DEPENDENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 200,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    PrimalInfeasible,
    DualInfeasible,
    /// The Newton system could not be factorized or progress stopped before
    /// the tolerance was met.
    Stalled,
}

impl SdpStatus {
    pub fn is_optimal(self) -> bool {
        self == SdpStatus::Optimal
    }

    pub fn is_infeasible(self) -> bool {
        matches!(self, SdpStatus::PrimalInfeasible | SdpStatus::DualInfeasible)
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: BlockMatrix,
    pub y: Vec<f64>,
    pub s: BlockMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// `|primal - dual| / (1 + |primal|)`.
    pub gap: f64,
    /// `||A(X) - b|| / (1 + ||b||)`.
    pub primal_infeasibility: f64,
    /// `||C - A^T y +- S||_F / (1 + ||C||_F)` with the sign of the sense.
    pub dual_infeasibility: f64,
}

struct Scaled {
    sizes: Vec<usize>,
    /// Internal minimization objective.
    c: BlockMatrix,
    /// Upper-triangle entries of each kept constraint, grouped by block.
    rows: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
    b: Vec<f64>,
    /// Row normalization factors (`A_i / nu_i`).
    nu: Vec<f64>,
    /// Indices into the original constraint list.
    kept: Vec<usize>,
    beta_b: f64,
    beta_c: f64,
    flip: f64,
    norm_b: f64,
    norm_c: f64,
}

impl Scaled {
    fn new(p: &SdpProblem) -> Self {
        let flip = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let norm_b = p.constraints.iter().map(|c| c.b * c.b).sum::<f64>().sqrt();
        let c_dense = p.objective.to_dense(&p.blocks);
        let norm_c = c_dense.frobenius_norm();

        let mut compacted: Vec<_> = p
            .constraints
            .iter()
            .map(|c| {
                let mut a = c.a.clone();
                a.compact();
                a
            })
            .collect();
        let kept = independent_rows(&mut compacted);
        if kept.len() < p.constraints.len() {
            warn!(
                "dropped {} linearly dependent constraint(s)",
                p.constraints.len() - kept.len()
            );
        }

        let mut rows = Vec::with_capacity(kept.len());
        let mut nu = Vec::with_capacity(kept.len());
        let mut b = Vec::with_capacity(kept.len());
        for &i in &kept {
            let a = &compacted[i];
            let n = a.frobenius_norm_sq().sqrt().max(f64::MIN_POSITIVE);
            let mut grouped: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for e in a.entries() {
                grouped
                    .entry(e.block)
                    .or_default()
                    .push((e.row, e.col, e.value / n));
            }
            rows.push(grouped.into_iter().collect());
            nu.push(n);
            b.push(p.constraints[i].b / n);
        }
        let beta_b = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        let beta_c = norm_c.max(1.0);
        b.iter_mut().for_each(|v| *v /= beta_b);
        let c = c_dense.scaled(flip / beta_c);

        Self {
            sizes: p.blocks.clone(),
            c,
            rows,
            b,
            nu,
            kept,
            beta_b,
            beta_c,
            flip,
            norm_b,
            norm_c,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn inner_row(&self, i: usize, x: &BlockMatrix) -> f64 {
        let mut acc = 0.0;
        for (blk, entries) in &self.rows[i] {
            let xb = &x.blocks[*blk];
            for &(r, c, v) in entries {
                acc += if r == c {
                    v * xb[(r, r)]
                } else {
                    v * (xb[(r, c)] + xb[(c, r)])
                };
            }
        }
        acc
    }

    fn apply(&self, x: &BlockMatrix) -> DVector<f64> {
        DVector::from_iterator(self.m(), (0..self.m()).map(|i| self.inner_row(i, x)))
    }

    fn apply_adjoint(&self, y: &DVector<f64>) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(&self.sizes);
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (blk, entries) in row {
                let ob = &mut out.blocks[*blk];
                for &(r, c, v) in entries {
                    ob[(r, c)] += yi * v;
                    if r != c {
                        ob[(c, r)] += yi * v;
                    }
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = tr(A_i X A_j Z)`.
    fn schur(&self, x: &BlockMatrix, z: &BlockMatrix) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::zeros(m, m);
        let nblocks = self.sizes.len();
        // members[block] = [(constraint, position in rows[constraint])]
        let mut members: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nblocks];
        for (i, row) in self.rows.iter().enumerate() {
            for (k, (blk, _)) in row.iter().enumerate() {
                members[*blk].push((i, k));
            }
        }
        for (blk, mem) in members.iter().enumerate() {
            let n = self.sizes[blk];
            let xb = &x.blocks[blk];
            let zb = &z.blocks[blk];
            if n == 1 {
                let xz = xb[(0, 0)] * zb[(0, 0)];
                for (pi, &(i, ki)) in mem.iter().enumerate() {
                    let ai = self.rows[i][ki].1[0].2;
                    for &(j, kj) in &mem[pi..] {
                        let aj = self.rows[j][kj].1[0].2;
                        out[(i, j)] += ai * aj * xz;
                    }
                }
                continue;
            }
            for (pi, &(i, ki)) in mem.iter().enumerate() {
                let g = sandwich(xb, &self.rows[i][ki].1, zb);
                for &(j, kj) in &mem[pi..] {
                    let mut acc = 0.0;
                    for &(r, c, v) in &self.rows[j][kj].1 {
                        acc += if r == c {
                            v * g[(r, r)]
                        } else {
                            v * (g[(r, c)] + g[(c, r)])
                        };
                    }
                    out[(i, j)] += acc;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }
}

/// `X A Z` for a sparse symmetric `A` given by upper-triangle entries.
fn sandwich(x: &DMatrix<f64>, a: &[(usize, usize, f64)], z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut rows: Vec<usize> = Vec::new();
    for &(r, c, _) in a {
        rows.push(r);
        rows.push(c);
    }
    rows.sort_unstable();
    rows.dedup();
    let pos = |r: usize| rows.binary_search(&r).unwrap();
    // T = (A Z)[rows, :]
    let mut t = DMatrix::zeros(rows.len(), n);
    for &(r, c, v) in a {
        let pr = pos(r);
        for k in 0..n {
            t[(pr, k)] += v * z[(c, k)];
        }
        if r != c {
            let pc = pos(c);
            for k in 0..n {
                t[(pc, k)] += v * z[(r, k)];
            }
        }
    }
    let xr = x.select_columns(rows.iter());
    xr * t
}

/// Greedy Gram-Schmidt over the constraint rows; returns the kept indices.
fn independent_rows(a: &mut [super::problem::SparseSymMatrix]) -> Vec<usize> {
    let m = a.len();
    // Gram matrix via shared positions.
    let mut by_pos: BTreeMap<(usize, usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, row) in a.iter().enumerate() {
        for e in row.entries() {
            let w = if e.row == e.col { 1.0 } else { 2.0f64.sqrt() };
            by_pos
                .entry((e.block, e.row, e.col))
                .or_default()
                .push((i, w * e.value));
        }
    }
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for list in by_pos.values() {
        for &(i, vi) in list {
            for &(j, vj) in list {
                gram[(i, j)] += vi * vj;
            }
        }
    }
    // Incremental Cholesky on the kept set.
    let mut kept: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        let gii = gram[(i, i)];
        if gii <= 0.0 {
            continue;
        }
        let mut row = Vec::with_capacity(kept.len() + 1);
        for (k, &j) in kept.iter().enumerate() {
            let mut s = gram[(i, j)];
            for t in 0..k {
                s -= row[t] * l[k][t];
            }
            row.push(s / l[k][k]);
        }
        let d2 = gii - row.iter().map(|v| v * v).sum::<f64>();
        if d2 <= DEPENDENCY_TOL * DEPENDENCY_TOL * gii {
            continue;
        }
        row.push(d2.sqrt());
        l.push(row);
        kept.push(i);
    }
    kept
}

/// Largest step `alpha` with `X + alpha dX >= 0` (may be infinite).
fn max_step(x: &BlockMatrix, dx: &BlockMatrix) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.blocks.iter().zip(&dx.blocks) {
        let n = xb.nrows();
        if n == 0 {
            continue;
        }
        let lam = if n == 1 {
            db[(0, 0)] / xb[(0, 0)]
        } else {
            let Some(ch) = Cholesky::new(xb.clone()) else {
                return 0.0;
            };
            let l = ch.l();
            let w = l
                .solve_lower_triangular(db)
                .and_then(|w| l.solve_lower_triangular(&w.transpose()));
            match w {
                Some(w) => min_sym_eigenvalue(&w),
                None => return 0.0,
            }
        };
        if lam < 0.0 {
            alpha = alpha.min(-1.0 / lam);
        }
    }
    alpha
}

fn inverse_blocks(s: &BlockMatrix) -> Option<BlockMatrix> {
    let mut out = Vec::with_capacity(s.blocks.len());
    for b in &s.blocks {
        if b.nrows() == 1 {
            if b[(0, 0)] <= 0.0 {
                return None;
            }
            out.push(DMatrix::from_element(1, 1, 1.0 / b[(0, 0)]));
        } else {
            out.push(Cholesky::new(b.clone())?.inverse());
        }
    }
    Some(BlockMatrix { blocks: out })
}

fn mul_blocks(a: &BlockMatrix, b: &BlockMatrix) -> BlockMatrix {
    BlockMatrix {
        blocks: a.blocks.iter().zip(&b.blocks).map(|(x, y)| x * y).collect(),
    }
}

fn factor_schur(m: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    let scale = m.diagonal().amax().max(1.0);
    let mut reg = m.clone();
    for k in [1e-14, 1e-12, 1e-10] {
        for i in 0..reg.nrows() {
            reg[(i, i)] = m[(i, i)] + k * scale;
        }
        if let Some(ch) = Cholesky::new(reg.clone()) {
            return Some(ch);
        }
    }
    None
}

struct Measures {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

/// Solves `p` to relative accuracy `opts.tol` (gap and both infeasibilities).
///
/// Returns an error only for structurally invalid problems; numerical
/// outcomes are reported through [`SdpStatus`].
pub fn solve_sdp(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.validate()?;
    let sc = Scaled::new(p);
    let m = sc.m();
    let n_total: usize = sc.sizes.iter().sum();
    let b = DVector::from_vec(sc.b.clone());

    // Starting point, per block.
    let mut x = BlockMatrix::zeros(&sc.sizes);
    let mut s = BlockMatrix::zeros(&sc.sizes);
    {
        let mut a_norm = vec![0.0f64; sc.sizes.len()];
        let mut xi_ratio = vec![0.0f64; sc.sizes.len()];
        for (i, row) in sc.rows.iter().enumerate() {
            for (blk, entries) in row {
                let nrm = entries
                    .iter()
                    .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                    .sum::<f64>()
                    .sqrt();
                a_norm[*blk] = a_norm[*blk].max(nrm);
                xi_ratio[*blk] = xi_ratio[*blk].max((1.0 + sc.b[i].abs()) / (1.0 + nrm));
            }
        }
        for (k, &n) in sc.sizes.iter().enumerate() {
            let nf = n as f64;
            let xi = 10f64.max(nf.sqrt()).max(nf * xi_ratio[k]);
            let eta = 10f64
                .max(nf.sqrt())
                .max(a_norm[k])
                .max(sc.c.blocks[k].norm());
            x.blocks[k] = DMatrix::identity(n, n) * xi;
            s.blocks[k] = DMatrix::identity(n, n) * eta;
        }
    }
    let mut y = DVector::zeros(m);

    let measure = |x: &BlockMatrix, y: &DVector<f64>, s: &BlockMatrix| -> (Measures, DVector<f64>, BlockMatrix) {
        let ax = sc.apply(x);
        let rp = &b - &ax;
        let mut rd = sc.c.clone();
        rd.axpy(-1.0, &sc.apply_adjoint(y));
        rd.axpy(-1.0, s);
        let k = sc.beta_b * sc.beta_c;
        let pobj = k * sc.c.inner(x);
        let dobj = k * b.dot(y);
        let pres: f64 = rp
            .iter()
            .zip(&sc.nu)
            .map(|(r, nu)| (r * nu * sc.beta_b).powi(2))
            .sum::<f64>()
            .sqrt();
        let dres = sc.beta_c * rd.frobenius_norm();
        let meas = Measures {
            pobj,
            dobj,
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
            pinf: pres / (1.0 + sc.norm_b),
            dinf: dres / (1.0 + sc.norm_c),
        };
        (meas, rp, rd)
    };

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut stall = 0;
    let mut last_mu = f64::INFINITY;
    let (mut meas, mut rp, mut rd) = measure(&x, &y, &s);

    while iterations < opts.max_iters {
        if meas.gap <= opts.tol && meas.pinf <= opts.tol && meas.dinf <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        // Infeasibility rays.
        let by = b.dot(&y);
        if by > 1.0 {
            let mut ray = sc.apply_adjoint(&y);
            ray.axpy(1.0, &s);
            if ray.frobenius_norm() / by < INFEASIBILITY_TOL {
                status = SdpStatus::PrimalInfeasible;
                break;
            }
        }
        let cx = sc.c.inner(&x);
        if cx < -1.0 && sc.apply(&x).norm() / (-cx) < INFEASIBILITY_TOL {
            status = SdpStatus::DualInfeasible;
            break;
        }

        let mu = x.inner(&s) / n_total as f64;
        let Some(z) = inverse_blocks(&s) else {
            status = SdpStatus::Stalled;
            break;
        };
        let schur = sc.schur(&x, &z);
        let Some(chol) = factor_schur(&schur) else {
            status = SdpStatus::Stalled;
            break;
        };

        let xrdz = mul_blocks(&mul_blocks(&x, &rd), &z);
        let direction = |target: &BlockMatrix| -> (DVector<f64>, BlockMatrix, BlockMatrix) {
            // target = sigma mu Z - X - [corrector] ; full K = target - X Rd Z
            let mut k = target.clone();
            k.axpy(-1.0, &xrdz);
            let rhs = &rp - sc.apply(&k);
            let dy = chol.solve(&rhs);
            let mut ds = rd.clone();
            ds.axpy(-1.0, &sc.apply_adjoint(&dy));
            let mut dx = target.clone();
            dx.axpy(-1.0, &mul_blocks(&mul_blocks(&x, &ds), &z));
            dx.symmetrize();
            (dy, dx, ds)
        };

        // Predictor.
        let mut target = x.scaled(-1.0);
        let (_, dx_a, ds_a) = direction(&target);
        let ap = max_step(&x, &dx_a).min(1.0);
        let ad = max_step(&s, &ds_a).min(1.0);
        let mut xa = x.clone();
        xa.axpy(ap, &dx_a);
        let mut sa = s.clone();
        sa.axpy(ad, &ds_a);
        let mu_aff = xa.inner(&sa) / n_total as f64;
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

        // Corrector.
        target.axpy(sigma * mu, &z);
        target.axpy(-1.0, &mul_blocks(&mul_blocks(&dx_a, &ds_a), &z));
        let (dy, dx, ds) = direction(&target);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let step_p = (gamma * max_step(&x, &dx)).min(1.0);
        let step_d = (gamma * max_step(&s, &ds)).min(1.0);
        x.axpy(step_p, &dx);
        s.axpy(step_d, &ds);
        y.axpy(step_d, &dy, 1.0);
        x.symmetrize();
        s.symmetrize();
        iterations += 1;

        (meas, rp, rd) = measure(&x, &y, &s);
        debug!(
            "it {iterations:3} pobj {:+.10e} dobj {:+.10e} gap {:.2e} pinf {:.2e} dinf {:.2e} steps {:.3}/{:.3}",
            meas.pobj, meas.dobj, meas.gap, meas.pinf, meas.dinf, step_p, step_d
        );

        let new_mu = x.inner(&s) / n_total as f64;
        if step_p.max(step_d) < 1e-8 || (new_mu >= last_mu * 0.999 && new_mu < 1e-14) {
            stall += 1;
        } else {
            stall = 0;
        }
        last_mu = new_mu;
        if stall >= 5 {
            status = SdpStatus::Stalled;
            break;
        }
    }
    if status == SdpStatus::MaxIterations
        && meas.gap <= opts.tol
        && meas.pinf <= opts.tol
        && meas.dinf <= opts.tol
    {
        status = SdpStatus::Optimal;
    }

    // Undo scaling.
    let x_out = x.scaled(sc.beta_b);
    let s_out = s.scaled(sc.beta_c);
    let mut y_out = vec![0.0; p.constraints.len()];
    for (k, &orig) in sc.kept.iter().enumerate() {
        y_out[orig] = sc.flip * sc.beta_c * y[k] / sc.nu[k];
    }
    Ok(SdpSolution {
        x: x_out,
        y: y_out,
        s: s_out,
        primal_obj: sc.flip * meas.pobj,
        dual_obj: sc.flip * meas.dobj,
        status,
        iterations,
        gap: meas.gap,
        primal_infeasibility: meas.pinf,
        dual_infeasibility: meas.dinf,
    })
}
