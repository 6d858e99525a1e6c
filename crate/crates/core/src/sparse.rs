//! Minimal deterministic sparse-matrix support: triplet accumulation,
//! compressed-row storage, and a sparse LU factorization (delegated to
//! `faer`) behind a single factorize/solve interface.
//!
//! Triplets are sorted by (row, col) before compression and duplicates are
//! summed in that fixed order, so assembled matrices are bitwise
//! reproducible regardless of how the triplets were produced.

use crate::{Error, Result};
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use std::io::Write;

/// Unassembled (row, col, value) entries.
#[derive(Debug, Clone)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn extend_from(&mut self, other: &Triplets) {
        debug_assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.entries.extend_from_slice(&other.entries);
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Compresses triplets (stable sort by row then column, duplicates
    /// summed in order).
    pub fn from_triplets(t: &Triplets) -> Self {
        let mut entries = t.entries.clone();
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; t.nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for i in 0..t.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows: t.nrows, ncols: t.ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            y[i] = acc;
        }
        y
    }

    /// `y += alpha * A^T x`; used for residuals of rectangular blocks.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[idx]] += self.values[idx] * x[i];
            }
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute asymmetry `max |A_ij − A_ji|`.
    pub fn symmetry_error(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut err = 0.0_f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                err = err.max((v - self.get(j, i)).abs());
            }
        }
        err
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut dense = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                dense[(i, j)] = v;
            }
        }
        dense
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based).
    /// With `symmetric` only the lower triangle is emitted.
    pub fn write_matrix_market(&self, symmetric: bool, out: &mut dyn Write) -> Result<()> {
        let kind = if symmetric { "symmetric" } else { "general" };
        writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
        let mut lines = Vec::new();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if symmetric && j > i {
                    continue;
                }
                lines.push((i + 1, j + 1, v));
            }
        }
        writeln!(out, "{} {} {}", self.nrows, self.ncols, lines.len())?;
        for (i, j, v) in lines {
            writeln!(out, "{i} {j} {v}")?;
        }
        Ok(())
    }
}

/// Writes a dense vector in MatrixMarket coordinate format as an n-by-1
/// general matrix.
pub fn write_vector_market(v: &[f64], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} 1 {}", v.len(), v.iter().filter(|x| **x != 0.0).count())?;
    for (i, x) in v.iter().enumerate() {
        if *x != 0.0 {
            writeln!(out, "{} 1 {x}", i + 1)?;
        }
    }
    Ok(())
}

/// Sparse LU factorization with fill-reducing ordering.
///
/// The pencil matrices here are symmetric but indefinite; an unsymmetric
/// LU with partial pivoting applied to the symmetric matrix is a stable
/// choice and stays behind this interface.
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl Factorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "factorization needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut trips = Vec::with_capacity(a.nnz());
        for i in 0..a.nrows() {
            for (j, v) in a.row(i) {
                trips.push(Triplet::new(i, j, v));
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows(), a.ncols(), &trips)
            .map_err(|e| Error::FactorizationFailed(format!("matrix build: {e:?}")))?;
        let symbolic = SymbolicLu::try_new(mat.symbolic())
            .map_err(|e| Error::FactorizationFailed(format!("symbolic analysis: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| Error::FactorizationFailed(format!("numeric factorization: {e:?}")))?;
        Ok(Factorization { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SparseMatrix {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 2.0);
        t.push(1, 1, 3.0);
        t.push(2, 2, 4.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        // duplicate entry sums
        t.push(0, 0, 0.5);
        SparseMatrix::from_triplets(&t)
    }

    #[test]
    fn duplicates_sum_and_lookup_works() {
        let a = example();
        assert_eq!(a.get(0, 0), 2.5);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.symmetry_error(), 0.0);
    }

    #[test]
    fn triplet_order_does_not_change_result() {
        let mut t1 = Triplets::new(2, 2);
        let mut t2 = Triplets::new(2, 2);
        let entries = [(0, 0, 0.1), (0, 0, 0.7), (1, 1, -0.3), (0, 0, 1e-9)];
        for e in entries {
            t1.push(e.0, e.1, e.2);
        }
        for e in entries.iter().rev() {
            t2.push(e.0, e.1, e.2);
        }
        let a1 = SparseMatrix::from_triplets(&t1);
        let a2 = SparseMatrix::from_triplets(&t2);
        assert!((a1.get(0, 0) - a2.get(0, 0)).abs() < 1e-14);
    }

    #[test]
    fn spmv_matches_dense() {
        let a = example();
        let x = vec![1.0, -2.0, 0.5];
        let y = a.mul_vec(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..3 {
            assert!((y[i] - yd[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn lu_solves_indefinite_system() {
        // Saddle-point-like matrix with a zero diagonal block.
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 2.0);
        t.push(0, 2, 1.0);
        t.push(2, 0, 1.0);
        t.push(1, 1, -1.0);
        let a = SparseMatrix::from_triplets(&t);
        let f = Factorization::new(&a).unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_market_output_shape() {
        let a = example();
        let mut buf = Vec::new();
        a.write_matrix_market(false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines.next().unwrap(), "3 3 5");
        assert_eq!(text.lines().count(), 7);
    }
}
