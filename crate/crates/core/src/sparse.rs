//! Compressed sparse row storage and a skyline (profile) Cholesky factorization.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Row pointers and column indices shared by every matrix assembled on one mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl CsrPattern {
    /// Builds a square pattern from (row, col) pairs; duplicates are merged and
    /// columns sorted within each row.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, c) in entries {
            if r >= n {
                return Err(Error::IndexOutOfRange { index: r, len: n });
            }
            if c >= n {
                return Err(Error::IndexOutOfRange { index: c, len: n });
            }
            rows[r].push(c);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of `(row, col)` in the value array.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|i| self.row_ptr[row] + i)
    }

    pub fn row(&self, row: usize) -> std::ops::Range<usize> {
        self.row_ptr[row]..self.row_ptr[row + 1]
    }

    pub fn col(&self, pos: usize) -> usize {
        self.col_idx[pos]
    }
}

/// Square sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let nnz = pattern.nnz();
        Self {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    pub fn from_values(pattern: Arc<CsrPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::ShapeMismatch {
                expected: pattern.nnz(),
                actual: values.len(),
            });
        }
        Ok(Self { pattern, values })
    }

    /// Builds a matrix from triplets, summing duplicates in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let pattern = Arc::new(CsrPattern::from_entries(
            n,
            triplets.iter().map(|&(r, c, _)| (r, c)),
        )?);
        let mut m = Self::zeros(pattern);
        for &(r, c, v) in triplets {
            let pos = m.pattern.position(r, c).expect("pattern built from triplets");
            m.values[pos] += v;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern
            .position(row, col)
            .map_or(0.0, |p| self.values[p])
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n()) {
            let mut acc = 0.0;
            for p in self.pattern.row(r) {
                acc += self.values[p] * x[self.pattern.col_idx[p]];
            }
            *yr = acc;
        }
    }

    /// `y += alpha A x`.
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n()) {
            let mut acc = 0.0;
            for p in self.pattern.row(r) {
                acc += self.values[p] * x[self.pattern.col_idx[p]];
            }
            *yr += alpha * acc;
        }
    }

    /// `self += alpha * other`; both matrices must share one pattern.
    pub fn add_scaled(&mut self, alpha: f64, other: &CsrMatrix) -> Result<()> {
        if self.pattern != other.pattern {
            return Err(Error::InvalidArgument(
                "matrices do not share a sparsity pattern".into(),
            ));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n() {
            for p in self.pattern.row(r) {
                let c = self.pattern.col_idx[p];
                worst = worst.max((self.values[p] - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n()]; self.n()];
        for (r, row) in d.iter_mut().enumerate() {
            for p in self.pattern.row(r) {
                row[self.pattern.col_idx[p]] = self.values[p];
            }
        }
        d
    }
}

/// Lower-triangular Cholesky factor stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    first_col: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factorizes a symmetric positive definite matrix; only the lower triangle is read.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let pat = a.pattern();
        let mut first_col = vec![0; n];
        for (r, fc) in first_col.iter_mut().enumerate() {
            *fc = pat.row(r).map(|p| pat.col(p)).filter(|&c| c <= r).min().unwrap_or(r);
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for r in 0..n {
            let last = row_start[r];
            row_start.push(last + (r - first_col[r] + 1));
        }
        let mut data = vec![0.0; row_start[n]];
        for r in 0..n {
            for p in pat.row(r) {
                let c = pat.col(p);
                if c <= r {
                    data[row_start[r] + c - first_col[r]] = a.values()[p];
                }
            }
        }
        let mut f = Self {
            n,
            first_col,
            row_start,
            data,
        };
        for i in 0..n {
            let fi = f.first_col[i];
            for j in fi..=i {
                let fj = f.first_col[j];
                let start = fi.max(fj);
                let mut sum = f.data[f.row_start[i] + j - fi];
                for k in start..j {
                    sum -= f.data[f.row_start[i] + k - fi] * f.data[f.row_start[j] + k - fj];
                }
                if j == i {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: sum });
                    }
                    f.data[f.row_start[i] + i - fi] = sum.sqrt();
                } else {
                    let ljj = f.data[f.row_start[j] + j - fj];
                    f.data[f.row_start[i] + j - fi] = sum / ljj;
                }
            }
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.data[self.row_start[i] + j - self.first_col[i]]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        // L y = b
        for i in 0..self.n {
            let fi = self.first_col[i];
            let mut s = x[i];
            for k in fi..i {
                s -= self.l(i, k) * x[k];
            }
            x[i] = s / self.l(i, i);
        }
        // L^T x = y
        for i in (0..self.n).rev() {
            x[i] /= self.l(i, i);
            let xi = x[i];
            let fi = self.first_col[i];
            for k in fi..i {
                x[k] -= self.l(i, k) * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
