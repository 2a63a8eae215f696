//! Compressed sparse column matrices and direct solvers.
//!
//! Matrices are assembled from (row, col, value) triplets with duplicates
//! summed. Explicit zeros are kept so that a pattern built once can be
//! refilled in place and refactorized against a cached symbolic analysis.

use crate::error::{Error, Result};
use faer::col::ColMut;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Side;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&i| (triplets[i].1, triplets[i].0));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c, v) = triplets[i];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Storage slot of entry `(r, c)`, if it is in the pattern.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (lo, hi) = (self.col_ptr[c], self.col_ptr[c + 1]);
        self.row_idx[lo..hi].binary_search(&r).ok().map(|k| lo + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                out.push((self.row_idx[k], c, self.values[k]));
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (c, &xc) in x.iter().enumerate() {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// The block with the given rows and columns, renumbered in the order given.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut row_map = vec![usize::MAX; self.nrows];
        for (i, &r) in rows.iter().enumerate() {
            row_map[r] = i;
        }
        let mut triplets = Vec::new();
        for (j, &c) in cols.iter().enumerate() {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let i = row_map[self.row_idx[k]];
                if i != usize::MAX {
                    triplets.push((i, j, self.values[k]));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols.len(), &triplets)
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .iter()
            .map(|&(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        let symbolic = SymbolicSparseColMatRef::new_checked(
            self.nrows,
            self.ncols,
            &self.col_ptr,
            None,
            &self.row_idx,
        );
        SparseColMatRef::new(symbolic, &self.values)
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Sparse LU with a reusable symbolic analysis.
pub struct SparseLu {
    symbolic: SymbolicLu<usize>,
    numeric: Option<Lu<usize, f64>>,
}

impl SparseLu {
    pub fn analyze(pattern: &SparseMatrix) -> Result<Self> {
        if pattern.nrows != pattern.ncols {
            return Err(Error::DimensionMismatch {
                expected: pattern.nrows,
                got: pattern.ncols,
            });
        }
        let symbolic = SymbolicLu::try_new(pattern.as_faer().symbolic())
            .map_err(|e| Error::LinearSolve(format!("symbolic LU: {e:?}")))?;
        Ok(SparseLu {
            symbolic,
            numeric: None,
        })
    }

    /// Numeric factorization of `a`, which must share the analyzed pattern.
    pub fn factorize(&mut self, a: &SparseMatrix) -> Result<()> {
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), a.as_faer())
            .map_err(|e| Error::LinearSolve(format!("numeric LU: {e:?}")))?;
        self.numeric = Some(lu);
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = self
            .numeric
            .as_ref()
            .ok_or_else(|| Error::LinearSolve("LU not factorized".into()))?;
        let mut x = rhs.to_vec();
        lu.solve_in_place(ColMut::from_slice_mut(&mut x));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution (singular matrix?)".into()));
        }
        Ok(x)
    }
}

/// Solves `a x = b` by LU with iterative refinement until the relative
/// residual drops below `rel_tol`.
pub fn solve_refined(lu: &SparseLu, a: &SparseMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = lu.solve(b)?;
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        rel = norm2(&r) / bnorm;
        if rel <= rel_tol {
            return Ok(x);
        }
        let dx = lu.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
    }
    Err(Error::LinearSolve(format!(
        "relative residual {rel:e} above {rel_tol:e} after refinement"
    )))
}

/// Sparse Cholesky for symmetric positive definite matrices.
pub struct SparseCholesky {
    llt: Llt<usize, f64>,
    matrix: SparseMatrix,
}

impl SparseCholesky {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let faer_a = a.as_faer();
        let symbolic = SymbolicLlt::try_new(faer_a.symbolic(), Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("symbolic Cholesky: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, faer_a, Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("Cholesky: {e:?}")))?;
        Ok(SparseCholesky {
            llt,
            matrix: a.clone(),
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solve to relative residual `rel_tol` (with refinement).
    pub fn solve(&self, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = b.to_vec();
        self.llt.solve_in_place(ColMut::from_slice_mut(&mut x));
        let mut rel = f64::INFINITY;
        for _ in 0..4 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            rel = norm2(&r) / bnorm;
            if rel <= rel_tol {
                return Ok(x);
            }
            let mut dx = r;
            self.llt.solve_in_place(ColMut::from_slice_mut(&mut dx));
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
        }
        Err(Error::LinearSolve(format!(
            "relative residual {rel:e} above {rel_tol:e} after refinement"
        )))
    }
}
