//! Quadratic harmonic convolutions.
//!
//! A time-periodic field is stored as half-spectrum coefficients `u_m`,
//! `u(t) = u_0 + sum_{m>=1} (u_m e^{i m omega t} + conj)`. Products of two
//! such fields mix harmonics; these routines return one harmonic of the
//! product, optionally weighted by a frequency-pair kernel so the same code
//! covers both the plain square and the oscillator's quadratic terms.

use num_complex::Complex64;
use num_traits::Zero;

/// Weighting of the real (two-sided) product expansion.
///
/// `TwoSided` is the product algebra consistent with the half-spectrum
/// storage above. `Legacy` halves the sum-frequency weights and drops the
/// conjugate doubling, matching the amplitude-style expansion some earlier
/// schemes print; it is kept for cross-checks against that convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    Legacy,
    TwoSided,
}

/// Harmonic `m` of the product of two stacks under the complex one-sided
/// expansion: only sum-frequency pairs `j + k = m` contribute.
///
/// `kernel(j, k)` weights the pair. Stacks are indexed `[harmonic][node]`.
pub fn convolve_complex<K>(
    a: &[Vec<Complex64>],
    b: &[Vec<Complex64>],
    m: usize,
    kernel: K,
) -> Vec<Complex64>
where
    K: Fn(i64, i64) -> f64,
{
    let n = a[0].len();
    let mut out = vec![Complex64::zero(); n];
    for j in 0..=m {
        let k = m - j;
        if j >= a.len() || k >= b.len() {
            continue;
        }
        let w = kernel(j as i64, k as i64);
        if w == 0.0 {
            continue;
        }
        let aj = &a[j];
        let bk = &b[k];
        for i in 0..n {
            out[i] += aj[i] * bk[i] * w;
        }
    }
    out
}

/// Harmonic `m >= 1` of the product `u * u` under the real two-sided
/// expansion, truncated at `n_max`.
///
/// Three families of pairs land on harmonic `m`: sum-frequency pairs
/// `(j, m-j)`, difference-frequency pairs `(-j, m+j)` entering through the
/// conjugate, and the cross term with the zero mode. The kernel sees the
/// signed pair.
pub fn convolve_real<K>(
    u: &[Vec<Complex64>],
    m: usize,
    n_max: usize,
    rule: WeightRule,
    kernel: K,
) -> Vec<Complex64>
where
    K: Fn(i64, i64) -> f64,
{
    assert!(m >= 1, "use convolve_real_zero for the zero mode");
    let n = u[0].len();
    let mut out = vec![Complex64::zero(); n];
    let (w_sum, w_diff) = match rule {
        WeightRule::Legacy => (0.5, 1.0),
        WeightRule::TwoSided => (1.0, 2.0),
    };
    for j in 1..m {
        let k = m - j;
        if j >= u.len() || k >= u.len() {
            continue;
        }
        let w = w_sum * kernel(j as i64, k as i64);
        if w == 0.0 {
            continue;
        }
        let (uj, uk) = (&u[j], &u[k]);
        for i in 0..n {
            out[i] += uj[i] * uk[i] * w;
        }
    }
    for j in 1..=n_max.saturating_sub(m) {
        let k = m + j;
        if j >= u.len() || k >= u.len() {
            continue;
        }
        let w = w_diff * kernel(-(j as i64), k as i64);
        if w == 0.0 {
            continue;
        }
        let (uj, uk) = (&u[j], &u[k]);
        for i in 0..n {
            out[i] += uj[i].conj() * uk[i] * w;
        }
    }
    if m < u.len() && !u[0].is_empty() {
        let w = 2.0 * kernel(0, m as i64);
        if w != 0.0 {
            let (u0, um) = (&u[0], &u[m]);
            for i in 0..n {
                out[i] += u0[i] * um[i] * w;
            }
        }
    }
    out
}

/// Zero-frequency harmonic of the product `u * u` under the real two-sided
/// expansion, truncated at `n_max`.
pub fn convolve_real_zero<K>(
    u: &[Vec<Complex64>],
    n_max: usize,
    rule: WeightRule,
    kernel: K,
) -> Vec<Complex64>
where
    K: Fn(i64, i64) -> f64,
{
    let n = u[0].len();
    let mut out = vec![Complex64::zero(); n];
    let w_pair = match rule {
        WeightRule::Legacy => 0.5,
        WeightRule::TwoSided => 2.0,
    };
    let w0 = kernel(0, 0);
    if w0 != 0.0 {
        for i in 0..n {
            out[i] += u[0][i] * u[0][i] * w0;
        }
    }
    for j in 1..=n_max {
        if j >= u.len() {
            continue;
        }
        let w = w_pair * kernel(-(j as i64), j as i64);
        if w == 0.0 {
            continue;
        }
        let uj = &u[j];
        for i in 0..n {
            out[i] += Complex64::new(uj[i].norm_sqr(), 0.0) * w;
        }
    }
    out
}
