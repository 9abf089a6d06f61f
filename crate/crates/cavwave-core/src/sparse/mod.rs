//! Complex sparse matrices and the direct solver behind every Helmholtz
//! solve: compressed-row storage, a fill-reducing minimum-degree ordering,
//! and a left-looking LU factorization with threshold partial pivoting.

mod lu;
mod mmio;
mod ordering;

pub use lu::{factor, factor_with_ordering, Factorization, DEFAULT_PIVOT_THRESHOLD};
pub use mmio::write_matrix_market;
pub use ordering::minimum_degree;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Compressed-row sparse matrix over `f64` or `Complex64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T> Csr<T>
where
    T: Copy + Zero + std::ops::AddAssign + std::ops::Mul<Output = T>,
{
    /// Build from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "triplet ({r}, {c}) outside {n_rows} x {n_cols}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty") += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Csr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// y = A x.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension(format!(
                "matvec: vector length {} does not match {} columns",
                x.len(),
                self.n_cols
            )));
        }
        let mut y = vec![T::zero(); self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Entry lookup (binary search within the row).
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }
}

impl Csr<f64> {
    /// Maximum absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    /// Product of a real matrix with a complex vector.
    pub fn matvec_complex(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension(format!(
                "matvec: vector length {} does not match {} columns",
                x.len(),
                self.n_cols
            )));
        }
        let mut out = vec![Complex64::zero(); self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = Complex64::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc += x[c] * v;
            }
            out[i] = acc;
        }
        Ok(out)
    }
}

impl Csr<Complex64> {
    /// Linear combination `sum_k coeff_k * A_k` of real matrices into one
    /// complex matrix, merging the sparsity patterns.
    pub fn combine(n: usize, terms: &[(Complex64, &Csr<f64>)]) -> Result<Csr<Complex64>> {
        for (_, a) in terms {
            if a.n_rows() != n || a.n_cols() != n {
                return Err(Error::Dimension(
                    "combine requires square matrices of equal size".into(),
                ));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, Complex64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            for (coeff, a) in terms {
                if coeff.is_zero() {
                    continue;
                }
                let (cols, vals) = a.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    scratch.push((c, coeff * v));
                }
            }
            scratch.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let col = scratch[k].0;
                let mut acc = Complex64::zero();
                while k < scratch.len() && scratch[k].0 == col {
                    acc += scratch[k].1;
                    k += 1;
                }
                col_idx.push(col);
                values.push(acc);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(Csr {
            n_rows: n,
            n_cols: n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Structure of the symmetrized pattern as adjacency lists (no diagonal).
    pub fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n_rows;
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            let (cols, _) = self.row(i);
            for &j in cols {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
