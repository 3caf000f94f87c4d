use nalgebra::DMatrix;

use crate::error::{NumericError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One upper-triangle entry (`row <= col`) of a symmetric block matrix.
/// An off-diagonal entry stands for both `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse symmetric block-diagonal matrix stored as upper-triangle triplets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSymMatrix {
    entries: Vec<SymEntry>,
}

impl SparseSymMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` and, for off-diagonal positions, at the
    /// mirrored position. Duplicate positions accumulate.
    pub fn add(&mut self, block: usize, row: usize, col: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(SymEntry {
            block,
            row,
            col,
            value,
        });
    }

    /// Adds the upper triangle of a dense symmetric matrix, scaled by `s`.
    pub fn add_dense(&mut self, block: usize, m: &DMatrix<f64>, s: f64) {
        for j in 0..m.ncols() {
            for i in 0..=j.min(m.nrows().saturating_sub(1)) {
                self.add(block, i, j, s * m[(i, j)]);
            }
        }
    }

    pub fn entries(&self) -> &[SymEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges duplicate positions and drops exact zeros; entries end up
    /// sorted by `(block, row, col)`.
    pub fn compact(&mut self) {
        self.entries
            .sort_by(|a, b| (a.block, a.row, a.col).cmp(&(b.block, b.row, b.col)));
        let mut out: Vec<SymEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => {
                    last.value += e.value
                }
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        self.entries = out;
    }

    /// `<self, X> = tr(self * X)`; `X` need not be symmetric.
    pub fn inner(&self, x: &BlockMatrix) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let b = &x.blocks[e.block];
                if e.row == e.col {
                    e.value * b[(e.row, e.row)]
                } else {
                    e.value * (b[(e.row, e.col)] + b[(e.col, e.row)])
                }
            })
            .sum()
    }

    /// `acc += s * self`.
    pub fn add_to(&self, acc: &mut BlockMatrix, s: f64) {
        for e in &self.entries {
            let b = &mut acc.blocks[e.block];
            b[(e.row, e.col)] += s * e.value;
            if e.row != e.col {
                b[(e.col, e.row)] += s * e.value;
            }
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        let mut m = self.clone();
        m.compact();
        m.entries
            .iter()
            .map(|e| {
                let w = if e.row == e.col { 1.0 } else { 2.0 };
                w * e.value * e.value
            })
            .sum()
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.value *= s;
        }
    }

    pub fn to_dense(&self, block_sizes: &[usize]) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(block_sizes);
        self.add_to(&mut out, 1.0);
        out
    }
}

/// Dense block-diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub blocks: Vec<DMatrix<f64>>,
}

impl BlockMatrix {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            blocks: sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn identity(sizes: &[usize], s: f64) -> Self {
        Self {
            blocks: sizes
                .iter()
                .map(|&n| DMatrix::identity(n, n) * s)
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn inner(&self, other: &BlockMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn axpy(&mut self, s: f64, other: &BlockMatrix) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.zip_apply(b, |u, v| *u += s * v);
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let t = b.transpose();
            *b += t;
            *b *= 0.5;
        }
    }

    /// Smallest eigenvalue over all blocks (`+inf` for an empty matrix).
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(min_sym_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => f64::INFINITY,
        1 => m[(0, 0)],
        _ => {
            let sym = (m + m.transpose()) * 0.5;
            sym.symmetric_eigenvalues().min()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub a: SparseSymMatrix,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: SparseSymMatrix,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, sense: Sense) -> Self {
        Self {
            blocks,
            objective: SparseSymMatrix::new(),
            constraints: Vec::new(),
            sense,
        }
    }

    pub fn add_constraint(&mut self, a: SparseSymMatrix, b: f64) {
        self.constraints.push(Constraint { a, b });
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Total matrix dimension (sum of block sizes).
    pub fn dimension(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Checks that every entry conforms to the block structure.
    pub fn validate(&self) -> Result<()> {
        let check = |m: &SparseSymMatrix| -> Result<()> {
            for e in m.entries() {
                let size = *self.blocks.get(e.block).ok_or_else(|| {
                    NumericError::ShapeMismatch(format!(
                        "block index {} but problem has {} blocks",
                        e.block,
                        self.blocks.len()
                    ))
                })?;
                if e.col >= size || !e.value.is_finite() {
                    return Err(NumericError::EntryOutOfRange {
                        block: e.block,
                        row: e.row,
                        col: e.col,
                        size,
                    });
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            check(&c.a)?;
            if !c.b.is_finite() {
                return Err(NumericError::NonFinite);
            }
        }
        Ok(())
    }

    /// `A(X)`: the vector of constraint inner products.
    pub fn apply(&self, x: &BlockMatrix) -> Vec<f64> {
        self.constraints.iter().map(|c| c.a.inner(x)).collect()
    }

    /// `A^T(y) = sum_i y_i A_i`.
    pub fn apply_adjoint(&self, y: &[f64]) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(&self.blocks);
        for (c, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                c.a.add_to(&mut out, yi);
            }
        }
        out
    }

    pub fn objective_value(&self, x: &BlockMatrix) -> f64 {
        self.objective.inner(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_inner_counts_mirrored_entries() {
        let mut a = SparseSymMatrix::new();
        a.add(0, 1, 0, 2.0);
        a.add(0, 1, 1, 3.0);
        let mut x = BlockMatrix::zeros(&[2]);
        x.blocks[0] = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 5.0, 7.0]);
        assert_eq!(a.inner(&x), 2.0 * 10.0 + 21.0);
        let dense = a.to_dense(&[2]);
        assert_eq!(dense.inner(&x), a.inner(&x));
        assert_eq!(a.frobenius_norm_sq(), 8.0 + 9.0);
    }

    #[test]
    fn compact_merges_duplicates() {
        let mut a = SparseSymMatrix::new();
        a.add(0, 0, 1, 1.0);
        a.add(0, 1, 0, -1.0);
        a.add(1, 0, 0, 2.0);
        a.compact();
        assert_eq!(a.entries().len(), 1);
        assert_eq!(a.entries()[0].block, 1);
    }

    #[test]
    fn validate_rejects_out_of_range_entries() {
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        let mut a = SparseSymMatrix::new();
        a.add(0, 0, 2, 1.0);
        p.add_constraint(a, 1.0);
        assert!(matches!(
            p.validate(),
            Err(NumericError::EntryOutOfRange { .. })
        ));
    }
}
