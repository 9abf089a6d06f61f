//! Left-looking sparse LU for complex matrices (Gilbert–Peierls style) with
//! threshold partial pivoting that prefers the diagonal of the fill-reducing
//! ordering. One factorization per harmonic index is reused across cascade
//! levels, fixed-point iterations, and amplitude sweeps.

use num_complex::Complex64;
use num_traits::Zero;

use super::{minimum_degree, Csr};
use crate::error::{Error, Result};

/// Relative magnitude a diagonal candidate needs (against the column
/// maximum) to be kept as the pivot.
pub const DEFAULT_PIVOT_THRESHOLD: f64 = 0.1;

/// LU decomposition `P A Q = L U` with unit-diagonal `L`.
///
/// `Q` is the fill-reducing column ordering, `P` the row permutation chosen
/// by pivoting. Immutable after construction; each solve is an independent
/// pair of sparse triangular sweeps, so repeated solves are bitwise
/// reproducible.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    // L columns, unit diagonal implicit; row indices are pivot positions.
    l_colptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<Complex64>,
    // U columns, strictly above the diagonal; indices are pivot positions.
    u_colptr: Vec<usize>,
    u_rows: Vec<usize>,
    u_vals: Vec<Complex64>,
    u_diag: Vec<Complex64>,
    /// Column ordering: factorization column j came from A column q[j].
    q: Vec<usize>,
    /// Row at pivot position j.
    prow: Vec<usize>,
    /// min |u_jj| / max |u_jj|; a crude conditioning indicator.
    pub condition_indicator: f64,
    /// Number of pivots that fell below 1e-14 of the largest pivot.
    pub tiny_pivots: usize,
}

/// Factor with a caller-provided column ordering (e.g. one minimum-degree
/// ordering shared by all matrices with the same pattern).
pub fn factor_with_ordering(
    a: &Csr<Complex64>,
    ordering: Option<&[usize]>,
    threshold: f64,
) -> Result<Factorization> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(Error::Dimension("LU requires a square matrix".into()));
    }
    let q: Vec<usize> = match ordering {
        Some(ord) => {
            if ord.len() != n {
                return Err(Error::Dimension("ordering length mismatch".into()));
            }
            ord.to_vec()
        }
        None => minimum_degree(&a.symmetric_adjacency()),
    };

    // Columns of A: transpose the CSR structure once.
    let (at_colptr, at_rows, at_vals) = transpose(a);

    let none = usize::MAX;
    let mut pinv = vec![none; n]; // old row -> pivot position
    let mut prow = vec![0usize; n];

    let mut l_colptr = vec![0usize; n + 1];
    let mut l_rows: Vec<usize> = Vec::new();
    let mut l_vals: Vec<Complex64> = Vec::new();
    let mut u_colptr = vec![0usize; n + 1];
    let mut u_rows: Vec<usize> = Vec::new();
    let mut u_vals: Vec<Complex64> = Vec::new();
    let mut u_diag = vec![Complex64::zero(); n];

    // Scatter workspace over old row indices.
    let mut x = vec![Complex64::zero(); n];
    let mut stamp = vec![usize::MAX; n];
    let mut pattern: Vec<usize> = Vec::new();
    // Reach workspace over pivot positions.
    let mut rstamp = vec![usize::MAX; n];
    let mut reach: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    let thr_sq = threshold * threshold;
    let mut max_pivot_sq = 0.0f64;
    let mut min_pivot_sq = f64::INFINITY;
    let mut tiny_pivots = 0usize;

    for j in 0..n {
        let cq = q[j];
        pattern.clear();
        reach.clear();

        // Scatter A(:, cq) and seed the reach DFS with its factored rows.
        for t in at_colptr[cq]..at_colptr[cq + 1] {
            let r = at_rows[t];
            x[r] = at_vals[t];
            stamp[r] = j;
            pattern.push(r);
        }
        for t in at_colptr[cq]..at_colptr[cq + 1] {
            let k = pinv[at_rows[t]];
            if k != none && rstamp[k] != j {
                dfs_reach(
                    k,
                    j,
                    &l_colptr,
                    &l_rows,
                    &pinv,
                    &mut rstamp,
                    &mut reach,
                    &mut stack,
                );
            }
        }
        // Forward-eliminate in increasing pivot-position order.
        reach.sort_unstable();
        for &k in &reach {
            let pr = prow[k];
            if stamp[pr] != j {
                stamp[pr] = j;
                x[pr] = Complex64::zero();
                pattern.push(pr);
            }
            let ukj = x[pr];
            if !ukj.is_zero() {
                u_rows.push(k);
                u_vals.push(ukj);
                for t in l_colptr[k]..l_colptr[k + 1] {
                    let r = l_rows[t]; // still an old row index during factorization
                    if stamp[r] != j {
                        stamp[r] = j;
                        x[r] = Complex64::zero();
                        pattern.push(r);
                    }
                    x[r] -= l_vals[t] * ukj;
                }
            }
        }
        u_colptr[j + 1] = u_rows.len();

        // Pivot among rows not yet assigned, preferring the diagonal row cq.
        let mut best = none;
        let mut best_sq = 0.0f64;
        for &r in &pattern {
            if pinv[r] == none {
                let m = x[r].norm_sqr();
                if m > best_sq || (m == best_sq && best != none && r < best) {
                    best_sq = m;
                    best = r;
                }
            }
        }
        if best == none || best_sq == 0.0 {
            return Err(Error::Singular { stage: j });
        }
        let mut pivot = best;
        if pinv[cq] == none && stamp[cq] == j {
            let dsq = x[cq].norm_sqr();
            if dsq >= thr_sq * best_sq && dsq > 0.0 {
                pivot = cq;
            }
        }
        let piv_val = x[pivot];
        let piv_sq = piv_val.norm_sqr();
        max_pivot_sq = max_pivot_sq.max(piv_sq);
        min_pivot_sq = min_pivot_sq.min(piv_sq);
        if piv_sq < (1e-14_f64 * 1e-14) * max_pivot_sq {
            tiny_pivots += 1;
            log::warn!(
                "near-singular pivot at stage {j}: |u_jj| = {:.3e}",
                piv_sq.sqrt()
            );
        }
        pinv[pivot] = j;
        prow[j] = pivot;
        u_diag[j] = piv_val;

        for &r in &pattern {
            if pinv[r] == none && !x[r].is_zero() {
                l_rows.push(r);
                l_vals.push(x[r] / piv_val);
            }
        }
        l_colptr[j + 1] = l_rows.len();
    }

    // Remap L rows from old indices to pivot positions for the solves.
    for r in l_rows.iter_mut() {
        *r = pinv[*r];
    }

    Ok(Factorization {
        n,
        l_colptr,
        l_rows,
        l_vals,
        u_colptr,
        u_rows,
        u_vals,
        u_diag,
        q,
        prow,
        condition_indicator: (min_pivot_sq / max_pivot_sq).sqrt(),
        tiny_pivots,
    })
}

/// Factor with a freshly computed minimum-degree ordering.
pub fn factor(a: &Csr<Complex64>) -> Result<Factorization> {
    factor_with_ordering(a, None, DEFAULT_PIVOT_THRESHOLD)
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` using the stored factors.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::Dimension(format!(
                "solve: length {} does not match {}",
                b.len(),
                self.n
            )));
        }
        // y = P b
        let mut y: Vec<Complex64> = (0..self.n).map(|j| b[self.prow[j]]).collect();
        // L y' = y (unit lower triangular, column sweep)
        for j in 0..self.n {
            let yj = y[j];
            if yj.is_zero() {
                continue;
            }
            for t in self.l_colptr[j]..self.l_colptr[j + 1] {
                y[self.l_rows[t]] -= self.l_vals[t] * yj;
            }
        }
        // U z = y' (back substitution, column sweep)
        for j in (0..self.n).rev() {
            let zj = y[j] / self.u_diag[j];
            y[j] = zj;
            if zj.is_zero() {
                continue;
            }
            for t in self.u_colptr[j]..self.u_colptr[j + 1] {
                y[self.u_rows[t]] -= self.u_vals[t] * zj;
            }
        }
        // x = Q y
        let mut out = vec![Complex64::zero(); self.n];
        for j in 0..self.n {
            out[self.q[j]] = y[j];
        }
        Ok(out)
    }

    /// Relative residual `||A x - b|| / ||b||` in the infinity norm.
    pub fn residual(&self, a: &Csr<Complex64>, x: &[Complex64], b: &[Complex64]) -> Result<f64> {
        let ax = a.matvec(x)?;
        let num = ax
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        let den = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(if den == 0.0 { num } else { num / den })
    }
}

/// DFS over the column dependency graph of L, collecting every position
/// reachable from `start` that is not yet marked for step `j`.
///
/// During factorization `l_rows` holds old row indices; an entry of column
/// `k` at a row already assigned pivot position `k2` means eliminating with
/// column `k` fills the working column at the pivot row of `k2`, so `k2`
/// must be eliminated as well.
fn dfs_reach(
    start: usize,
    j: usize,
    l_colptr: &[usize],
    l_rows: &[usize],
    pinv: &[usize],
    rstamp: &mut [usize],
    reach: &mut Vec<usize>,
    stack: &mut Vec<(usize, usize)>,
) {
    let none = usize::MAX;
    stack.clear();
    stack.push((start, l_colptr[start]));
    rstamp[start] = j;
    while let Some(top) = stack.last_mut() {
        let k = top.0;
        let t = top.1;
        if t < l_colptr[k + 1] {
            top.1 += 1;
            let child = pinv[l_rows[t]];
            if child != none && rstamp[child] != j {
                rstamp[child] = j;
                stack.push((child, l_colptr[child]));
            }
        } else {
            stack.pop();
            reach.push(k);
        }
    }
}

/// CSR -> CSC transposition returning (colptr, rows, vals).
pub(crate) fn transpose(a: &Csr<Complex64>) -> (Vec<usize>, Vec<usize>, Vec<Complex64>) {
    let n_rows = a.n_rows();
    let n_cols = a.n_cols();
    let mut colptr = vec![0usize; n_cols + 1];
    for &c in a.col_idx() {
        colptr[c + 1] += 1;
    }
    for c in 0..n_cols {
        colptr[c + 1] += colptr[c];
    }
    let mut rows = vec![0usize; a.nnz()];
    let mut vals = vec![Complex64::zero(); a.nnz()];
    let mut next = colptr.clone();
    for i in 0..n_rows {
        let (cols, v) = a.row(i);
        for (&c, &val) in cols.iter().zip(v) {
            let slot = next[c];
            rows[slot] = i;
            vals[slot] = val;
            next[c] += 1;
        }
    }
    (colptr, rows, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dense Gaussian elimination with partial pivoting, used as an oracle.
    fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut m: Vec<Vec<Complex64>> = a.to_vec();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| m[i][k].norm().partial_cmp(&m[j][k].norm()).unwrap())
                .unwrap();
            m.swap(k, piv);
            rhs.swap(k, piv);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for jj in k..n {
                    let v = m[k][jj];
                    m[i][jj] -= f * v;
                }
                let v = rhs[k];
                rhs[i] -= f * v;
            }
        }
        let mut x = vec![Complex64::zero(); n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for jj in i + 1..n {
                s -= m[i][jj] * x[jj];
            }
            x[i] = s / m[i][i];
        }
        x
    }

    fn random_sparse(n: usize, rng: &mut ChaCha8Rng) -> (Csr<Complex64>, Vec<Vec<Complex64>>) {
        let mut dense = vec![vec![Complex64::zero(); n]; n];
        let mut triplets = Vec::new();
        for i in 0..n {
            // Dominant diagonal keeps the random matrices comfortably regular.
            let d = c(4.0 + rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
            dense[i][i] = d;
            triplets.push((i, i, d));
            for _ in 0..3 {
                let jj = rng.gen_range(0..n);
                if jj == i {
                    continue;
                }
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                dense[i][jj] += v;
                triplets.push((i, jj, v));
            }
        }
        (Csr::from_triplets(n, n, &triplets).unwrap(), dense)
    }

    #[test]
    fn solves_diagonal_system() {
        let a = Csr::from_triplets(3, 3, &[(0, 0, c(2.0, 0.0)), (1, 1, c(0.0, 4.0)), (2, 2, c(-1.0, 1.0))]).unwrap();
        let f = factor(&a).unwrap();
        let b = vec![c(2.0, 0.0), c(4.0, 0.0), c(1.0, 0.0)];
        let x = f.solve(&b).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((x[2] - c(-0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn matches_dense_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 10, 30] {
            let (a, dense) = random_sparse(n, &mut rng);
            let b: Vec<Complex64> = (0..n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let x = factor(&a).unwrap().solve(&b).unwrap();
            let x_ref = dense_solve(&dense, &b);
            for (p, q) in x.iter().zip(&x_ref) {
                assert!((p - q).norm() < 1e-10, "n={n}: {p} vs {q}");
            }
        }
    }

    #[test]
    fn residual_stays_small_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (a, _) = random_sparse(80, &mut rng);
            let b: Vec<Complex64> = (0..80)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = factor(&a).unwrap();
            let x = f.solve(&b).unwrap();
            assert!(f.residual(&a, &x, &b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn roundtrip_recovers_known_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (a, _) = random_sparse(60, &mut rng);
        let x_true: Vec<Complex64> = (0..60)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let b = a.matvec(&x_true).unwrap();
        let x = factor(&a).unwrap().solve(&b).unwrap();
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn reports_singular_matrix() {
        // Second column is identically zero.
        let a = Csr::from_triplets(
            3,
            3,
            &[(0, 0, c(1.0, 0.0)), (1, 2, c(1.0, 0.0)), (2, 0, c(1.0, 0.0)), (2, 2, c(2.0, 0.0))],
        )
        .unwrap();
        match factor(&a) {
            Err(Error::Singular { .. }) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (a, _) = random_sparse(50, &mut rng);
        let b: Vec<Complex64> = (0..50)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = factor(&a).unwrap();
        let x1 = f.solve(&b).unwrap();
        let x2 = f.solve(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert_eq!(p.re.to_bits(), q.re.to_bits());
            assert_eq!(p.im.to_bits(), q.im.to_bits());
        }
        // A fresh factorization of the same matrix also reproduces bits.
        let x3 = factor(&a).unwrap().solve(&b).unwrap();
        for (p, q) in x1.iter().zip(&x3) {
            assert_eq!(p.re.to_bits(), q.re.to_bits());
        }
    }

    #[test]
    fn shared_ordering_matches_fresh_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let (a, _) = random_sparse(40, &mut rng);
        let ord = minimum_degree(&a.symmetric_adjacency());
        let b: Vec<Complex64> = (0..40)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x1 = factor(&a).unwrap().solve(&b).unwrap();
        let x2 = factor_with_ordering(&a, Some(&ord), DEFAULT_PIVOT_THRESHOLD)
            .unwrap()
            .solve(&b)
            .unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn condition_indicator_reflects_scaling() {
        let a = Csr::from_triplets(
            2,
            2,
            &[(0, 0, c(1.0, 0.0)), (1, 1, c(1e-6, 0.0))],
        )
        .unwrap();
        let f = factor(&a).unwrap();
        assert!((f.condition_indicator - 1e-6).abs() < 1e-18);
    }
}
