//! Multiharmonic cut-off solvers for the coupled pressure / bubble-volume
//! system.
//!
//! Each harmonic of the periodic ansatz satisfies a complex Helmholtz
//! problem whose right-hand side collects quadratic interactions of lower
//! (and, in the real formulations, higher) harmonics. The volume unknowns
//! never enter the linear systems: they are eliminated analytically through
//! the oscillator's transfer function, which keeps one sparse factorization
//! per harmonic as the entire linear-algebra cost. Factorizations are
//! cached, so amplitude sweeps and fixed-point levels reuse them.

mod convolution;

pub use convolution::{convolve_complex, convolve_real, convolve_real_zero, WeightRule};

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_forms, assemble_helmholtz, monopole_profile, AssembledForms};
use crate::mesh::Mesh;
use crate::params::{
    alpha_m, derive_constants, effective_two_harmonic, volume_kernel, DerivedConstants,
    NumberDensity, SimulationParams,
};
use crate::sparse::{factor_with_ordering, minimum_degree, Factorization, DEFAULT_PIVOT_THRESHOLD};

/// Hard cap on any pressure (or coupled volume) amplitude; beyond this the
/// fixed-point iteration is declared divergent.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// The solution schemes. The two complex schemes keep only sum-frequency
/// interactions, the two real schemes keep the full two-sided product
/// algebra (differing in whether the zero-frequency volume mode is carried),
/// and the two-harmonic scheme folds the bubble response into effective
/// coefficients for a two-equation system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    RealFull,
    RealV0Zero,
    ComplexDirect,
    ComplexLinearized,
    TwoHarmonic,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::RealFull => "real-full",
            Formulation::RealV0Zero => "real-v0zero",
            Formulation::ComplexDirect => "complex-direct",
            Formulation::ComplexLinearized => "complex-linearized",
            Formulation::TwoHarmonic => "two-harmonic",
        }
    }

    /// Whether the scheme uses the two-sided (difference-frequency) algebra.
    pub fn is_real(self) -> bool {
        matches!(self, Formulation::RealFull | Formulation::RealV0Zero)
    }

    pub fn all() -> [Formulation; 5] {
        [
            Formulation::RealFull,
            Formulation::RealV0Zero,
            Formulation::ComplexDirect,
            Formulation::ComplexLinearized,
            Formulation::TwoHarmonic,
        ]
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::all()
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown formulation '{s}'; expected one of {}",
                    Formulation::all().map(|f| f.label()).join(", ")
                ))
            })
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Geometry of the time-harmonic source injected at the fundamental.
#[derive(Debug, Clone, Copy)]
pub struct SourceSpec {
    pub r_delta: f64,
    pub center: [f64; 2],
}

/// Harmonic coefficients of a periodic solution: `pressure[m]` and
/// `volume[m]` hold the nodal half-spectrum coefficients of harmonic `m`,
/// `0 <= m <= n_max`. The zero pressure mode is identically zero; the zero
/// volume mode is carried only by the full real scheme.
#[derive(Debug, Clone)]
pub struct HarmonicStack {
    pub formulation: Formulation,
    pub n_max: u32,
    pub pressure: Vec<Vec<Complex64>>,
    pub volume: Vec<Vec<Complex64>>,
    /// Number of fixed-point levels that produced this stack.
    pub levels_run: u32,
    /// Set when a bubble-free run overflowed the decoupled volume chain,
    /// which is then zeroed (the pressure field is unaffected).
    pub volume_zeroed: bool,
}

impl HarmonicStack {
    fn zeros(formulation: Formulation, n_max: u32, n_nodes: usize) -> Self {
        let blank = vec![vec![Complex64::zero(); n_nodes]; n_max as usize + 1];
        HarmonicStack {
            formulation,
            n_max,
            pressure: blank.clone(),
            volume: blank,
            levels_run: 0,
            volume_zeroed: false,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.pressure[0].len()
    }

    pub fn pressure_harmonic(&self, m: u32) -> &[Complex64] {
        &self.pressure[m as usize]
    }

    pub fn volume_harmonic(&self, m: u32) -> &[Complex64] {
        &self.volume[m as usize]
    }

    pub fn max_abs_pressure(&self, m: u32) -> f64 {
        self.pressure[m as usize]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Everything reusable across runs on one mesh with one parameter set:
/// assembled forms, the shared fill-reducing ordering, and one cached
/// factorization per harmonic.
pub struct CascadeSession<'m> {
    mesh: &'m Mesh,
    params: SimulationParams,
    dc: DerivedConstants,
    forms: AssembledForms,
    source: SourceSpec,
    unit_source: Vec<f64>,
    ordering: Option<Vec<usize>>,
    factors: Vec<Option<Factorization>>,
}

impl<'m> CascadeSession<'m> {
    pub fn new(mesh: &'m Mesh, params: SimulationParams, source: SourceSpec) -> Result<Self> {
        params.validate()?;
        let dc = derive_constants(&params)?;
        let n0 = params.n0.nodal_values(mesh.n_nodes())?;
        let weight: Vec<f64> = n0
            .iter()
            .map(|density| dc.mu * params.rho0 * density)
            .collect();
        let forms = assemble_forms(mesh, &weight)?;
        let unit_source = monopole_profile(mesh, 1.0, source.r_delta, source.center)?;
        Ok(CascadeSession {
            mesh,
            params,
            dc,
            forms,
            source,
            unit_source,
            ordering: None,
            factors: Vec::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn params(&self) -> &SimulationParams {
        &self.params
    }

    pub fn derived(&self) -> &DerivedConstants {
        &self.dc
    }

    pub fn forms(&self) -> &AssembledForms {
        &self.forms
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }

    /// Factorize the system matrices for harmonics `1..=n_max` that are not
    /// cached yet. Factorizations are independent and run in parallel.
    pub fn prepare(&mut self, n_max: u32) -> Result<()> {
        validate_n_max(n_max)?;
        if self.ordering.is_none() {
            let a1 = assemble_helmholtz(&self.forms, 1, self.params.omega, &self.params, &self.dc)?;
            self.ordering = Some(minimum_degree(&a1.symmetric_adjacency()));
        }
        while self.factors.len() < n_max as usize {
            self.factors.push(None);
        }
        let ordering = self.ordering.as_deref();
        let missing: Vec<u32> = (1..=n_max)
            .filter(|&m| self.factors[m as usize - 1].is_none())
            .collect();
        let results: Vec<(u32, Result<Factorization>)> = missing
            .par_iter()
            .map(|&m| {
                let fact = assemble_helmholtz(
                    &self.forms,
                    m,
                    self.params.omega,
                    &self.params,
                    &self.dc,
                )
                .and_then(|a| factor_with_ordering(&a, ordering, DEFAULT_PIVOT_THRESHOLD));
                (m, fact)
            })
            .collect();
        for (m, fact) in results {
            self.factors[m as usize - 1] = Some(fact?);
        }
        Ok(())
    }

    /// Run a scheme at the given cut-off and source amplitude.
    pub fn run(
        &mut self,
        formulation: Formulation,
        n_max: u32,
        amplitude: f64,
    ) -> Result<HarmonicStack> {
        self.run_with_polish(formulation, n_max, amplitude, 0)
    }

    /// Like [`run`](Self::run) with `extra_levels` additional fixed-point
    /// levels appended for the level-based schemes (off by default; the
    /// complex direct scheme is already exact).
    pub fn run_with_polish(
        &mut self,
        formulation: Formulation,
        n_max: u32,
        amplitude: f64,
        extra_levels: u32,
    ) -> Result<HarmonicStack> {
        validate_n_max(n_max)?;
        if !amplitude.is_finite() {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        match formulation {
            Formulation::ComplexDirect => self.run_complex_direct(n_max, amplitude),
            Formulation::ComplexLinearized | Formulation::RealFull | Formulation::RealV0Zero => {
                self.run_levels(formulation, n_max, amplitude, n_max + extra_levels)
            }
            Formulation::TwoHarmonic => {
                if n_max != 2 {
                    return Err(Error::InvalidParameter(format!(
                        "the two-harmonic scheme is defined for cut-off 2, got {n_max}"
                    )));
                }
                self.run_two_harmonic(amplitude)
            }
        }
    }

    /// Triangular sweep: with sum-frequency interactions only, harmonic `m`
    /// depends on harmonics below it, so one pass in increasing `m` solves
    /// the truncated system exactly.
    fn run_complex_direct(&mut self, n_max: u32, amplitude: f64) -> Result<HarmonicStack> {
        self.prepare(n_max)?;
        let mut stack = HarmonicStack::zeros(Formulation::ComplexDirect, n_max, self.mesh.n_nodes());
        let omega = self.params.omega;
        let dc = self.dc;
        for m in 1..=n_max {
            let f_p = convolve_complex(&stack.pressure, &stack.pressure, m as usize, |_, _| 1.0);
            let f_v = convolve_complex(&stack.volume, &stack.volume, m as usize, |a, b| {
                volume_kernel(a, b, omega, &dc)
            });
            let p = self.solve_harmonic(m, amplitude, &f_p, &f_v)?;
            let v = self.eliminate_volume(m, &p, &f_v)?;
            stack.pressure[m as usize] = p;
            stack.volume[m as usize] = v;
        }
        stack.levels_run = 1;
        self.guard(&mut stack, 1)?;
        Ok(stack)
    }

    /// Level iteration: every harmonic of the next level is computed from
    /// the previous level's stack (the linearization of the coupled system
    /// around it). The sum-frequency coupling is nilpotent, so the complex
    /// variant reproduces the direct sweep after exactly `n_max` levels; the
    /// real variants converge or hit the divergence guard.
    fn run_levels(
        &mut self,
        formulation: Formulation,
        n_max: u32,
        amplitude: f64,
        levels: u32,
    ) -> Result<HarmonicStack> {
        self.prepare(n_max)?;
        let n = self.mesh.n_nodes();
        let mut prev = HarmonicStack::zeros(formulation, n_max, n);
        for level in 1..=levels {
            let mut next = HarmonicStack::zeros(formulation, n_max, n);
            next.volume_zeroed = prev.volume_zeroed;
            if formulation == Formulation::RealFull && !next.volume_zeroed {
                match self.volume_zero_mode(&prev, level) {
                    Ok(v0) => next.volume[0] = v0,
                    // Without bubbles the volume chain is a decoupled
                    // diagnostic; losing its periodic zero mode follows the
                    // same policy as a plain overflow (see `guard`).
                    Err(Error::Diverged(msg)) if self.params.n0.is_zero() => {
                        log::warn!(
                            "bubble-free volume chain is invalid ({msg}); \
                             volume harmonics are zeroed (pressure is unaffected)"
                        );
                        next.volume_zeroed = true;
                    }
                    Err(e) => return Err(e),
                }
            }
            for m in 1..=n_max {
                let (f_p, f_v) = self.level_quadratics(&prev, m, n_max);
                let p = self.solve_harmonic(m, amplitude, &f_p, &f_v)?;
                if !next.volume_zeroed {
                    next.volume[m as usize] = self.eliminate_volume(m, &p, &f_v)?;
                }
                next.pressure[m as usize] = p;
            }
            next.levels_run = level;
            self.guard(&mut next, level)?;
            prev = next;
        }
        Ok(prev)
    }

    fn level_quadratics(
        &self,
        stack: &HarmonicStack,
        m: u32,
        n_max: u32,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let omega = self.params.omega;
        let dc = self.dc;
        if stack.formulation.is_real() {
            (
                convolve_real(&stack.pressure, m as usize, n_max as usize, WeightRule::TwoSided, |_, _| 1.0),
                convolve_real(&stack.volume, m as usize, n_max as usize, WeightRule::TwoSided, |a, b| {
                    volume_kernel(a, b, omega, &dc)
                }),
            )
        } else {
            (
                convolve_complex(&stack.pressure, &stack.pressure, m as usize, |_, _| 1.0),
                convolve_complex(&stack.volume, &stack.volume, m as usize, |a, b| {
                    volume_kernel(a, b, omega, &dc)
                }),
            )
        }
    }

    /// Zero root of the zero-frequency volume balance
    /// `omega0^2 v0 = zeta v0^2 + S`, `S = 2 sum_j K(-j, j) |v_j|^2`.
    fn volume_zero_mode(&self, stack: &HarmonicStack, level: u32) -> Result<Vec<Complex64>> {
        let omega = self.params.omega;
        let dc = &self.dc;
        let w0sq = dc.omega0 * dc.omega0;
        let n = stack.n_nodes();
        let mut out = vec![Complex64::zero(); n];
        let s_field = convolve_real_zero(
            &stack.volume,
            stack.n_max as usize,
            WeightRule::TwoSided,
            |a, b| {
                if a == 0 && b == 0 {
                    0.0 // the zeta v0^2 part is kept on the left of the balance
                } else {
                    volume_kernel(a, b, omega, dc)
                }
            },
        );
        for i in 0..n {
            let s = s_field[i].re;
            let disc = w0sq * w0sq - 4.0 * dc.zeta * s;
            if disc < 0.0 {
                return Err(Error::Diverged(format!(
                    "zero-frequency volume balance lost its real root at level {level}"
                )));
            }
            out[i] = Complex64::new(2.0 * s / (w0sq + disc.sqrt()), 0.0);
        }
        Ok(out)
    }

    /// Solve the Helmholtz problem of harmonic `m` with source amplitude
    /// `amplitude` and the quadratic fields `f_p` (pressure square) and
    /// `f_v` (volume quadratics).
    fn solve_harmonic(
        &self,
        m: u32,
        amplitude: f64,
        f_p: &[Complex64],
        f_v: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let omega = self.params.omega;
        let mw = m as f64 * omega;
        let k2 = (mw / self.params.c).powi(2);
        let eta = self.dc.eta;
        let n = self.mesh.n_nodes();

        let rhs_field: Vec<Complex64> = (0..n)
            .map(|i| {
                let h = if m == 1 {
                    amplitude * self.unit_source[i]
                } else {
                    0.0
                };
                -(k2) * (f_p[i] * eta + h)
            })
            .collect();
        let mut rhs = self.forms.mass.matvec_complex(&rhs_field)?;

        // The weighted mass's nodal weight is mu rho0 n0(x); dividing by mu
        // leaves the rho0 n0(x) weighting of the volume source term.
        if !self.params.n0.is_zero() {
            let alpha = alpha_m(m, omega, &self.dc)?;
            let wv = self.forms.weighted_mass.matvec_complex(f_v)?;
            let cv = -alpha * mw * mw / self.dc.mu;
            for (r, w) in rhs.iter_mut().zip(&wv) {
                *r += cv * w;
            }
        }

        let fact = self.factors[m as usize - 1]
            .as_ref()
            .expect("prepare() fills the factor cache");
        fact.solve(&rhs)
    }

    /// Analytic elimination of the volume harmonic:
    /// `v_m = alpha_m (f_v - mu p_m)`.
    fn eliminate_volume(
        &self,
        m: u32,
        p: &[Complex64],
        f_v: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let alpha = alpha_m(m, self.params.omega, &self.dc)?;
        let mu = self.dc.mu;
        Ok(p.iter()
            .zip(f_v)
            .map(|(pi, fi)| alpha * (fi - mu * pi))
            .collect())
    }

    /// Divergence guard. Pressure must stay finite and below the cap. The
    /// volume chain is held to the same standard while it feeds back into
    /// the pressure; without bubbles it is a decoupled diagnostic, and an
    /// overflow there only zeroes it with a warning.
    fn guard(&self, stack: &mut HarmonicStack, level: u32) -> Result<()> {
        for (m, field) in stack.pressure.iter().enumerate() {
            for v in field {
                if !v.re.is_finite() || !v.im.is_finite() || v.norm() > DIVERGENCE_GUARD {
                    return Err(Error::Diverged(format!(
                        "pressure harmonic {m} exceeded {DIVERGENCE_GUARD:.0e} at level {level}"
                    )));
                }
            }
        }
        let coupled = !self.params.n0.is_zero();
        let mut volume_bad = None;
        'scan: for (m, field) in stack.volume.iter().enumerate() {
            for v in field {
                if !v.re.is_finite() || !v.im.is_finite() || v.norm() > DIVERGENCE_GUARD {
                    volume_bad = Some(m);
                    break 'scan;
                }
            }
        }
        if let Some(m) = volume_bad {
            if coupled {
                return Err(Error::Diverged(format!(
                    "volume harmonic {m} exceeded {DIVERGENCE_GUARD:.0e} at level {level}"
                )));
            }
            if !stack.volume_zeroed {
                log::warn!(
                    "bubble-free volume chain overflowed at level {level}; \
                     volume harmonics are zeroed (pressure is unaffected)"
                );
            }
            for field in stack.volume.iter_mut() {
                for v in field.iter_mut() {
                    *v = Complex64::zero();
                }
            }
            stack.volume_zeroed = true;
        }
        Ok(())
    }

    /// Two-harmonic effective scheme: the fundamental solves its effective
    /// Helmholtz problem, and the second harmonic is forced by the square of
    /// the fundamental weighted by the effective nonlinearity (the acoustic
    /// contribution plus the bubble-mediated addition).
    fn run_two_harmonic(&mut self, amplitude: f64) -> Result<HarmonicStack> {
        let n0_uniform = match self.params.n0 {
            NumberDensity::Uniform(v) => v,
            NumberDensity::Nodal(_) => {
                return Err(Error::InvalidParameter(
                    "the two-harmonic scheme requires a uniform bubble density".into(),
                ))
            }
        };
        self.prepare(2)?;
        let omega = self.params.omega;
        let dc = self.dc;
        let mut stack = HarmonicStack::zeros(Formulation::TwoHarmonic, 2, self.mesh.n_nodes());

        let zeros = vec![Complex64::zero(); self.mesh.n_nodes()];
        let p1 = self.solve_harmonic(1, amplitude, &zeros, &zeros)?;
        let alpha1 = alpha_m(1, omega, &dc)?;
        let v1: Vec<Complex64> = p1.iter().map(|p| -alpha1 * dc.mu * p).collect();

        let (_, _, beta_tilde) = effective_two_harmonic(&self.params, &dc, n0_uniform)?;
        let eta_eff = Complex64::new(self.dc.eta, 0.0)
            + beta_tilde / (self.params.rho0 * self.params.c * self.params.c);
        let k2 = (2.0 * omega / self.params.c).powi(2);
        let rhs_field: Vec<Complex64> = p1.iter().map(|p| -(k2) * eta_eff * p * p).collect();
        let rhs = self.forms.mass.matvec_complex(&rhs_field)?;
        let p2 = self.factors[1]
            .as_ref()
            .expect("prepared above")
            .solve(&rhs)?;

        let alpha2 = alpha_m(2, omega, &dc)?;
        let k11 = volume_kernel(1, 1, omega, &dc);
        let v2: Vec<Complex64> = p2
            .iter()
            .zip(&v1)
            .map(|(p, v)| alpha2 * (k11 * v * v - dc.mu * p))
            .collect();

        stack.pressure[1] = p1;
        stack.pressure[2] = p2;
        stack.volume[1] = v1;
        stack.volume[2] = v2;
        stack.levels_run = 1;
        self.guard(&mut stack, 1)?;
        Ok(stack)
    }
}

fn validate_n_max(n_max: u32) -> Result<()> {
    if (1..=64).contains(&n_max) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "harmonic cut-off must lie in 1..=64, got {n_max}"
        )))
    }
}

/// Largest relative residual of the eliminated volume equation
/// `(1/alpha_m) v_m = f_v,m - mu p_m` over all harmonics (and the
/// zero-frequency balance for the full real scheme).
///
/// Returns `None` when the volume chain was zeroed after a bubble-free
/// overflow, in which case the equation is not represented.
pub fn ode_residual_max(
    stack: &HarmonicStack,
    params: &SimulationParams,
    dc: &DerivedConstants,
) -> Option<f64> {
    if stack.volume_zeroed {
        return None;
    }
    let omega = params.omega;
    let n_max = stack.n_max as usize;
    let mut worst: f64 = 0.0;
    for m in 1..=stack.n_max {
        let f_v = if stack.formulation.is_real() {
            convolve_real(&stack.volume, m as usize, n_max, WeightRule::TwoSided, |a, b| {
                volume_kernel(a, b, omega, dc)
            })
        } else {
            convolve_complex(&stack.volume, &stack.volume, m as usize, |a, b| {
                volume_kernel(a, b, omega, dc)
            })
        };
        let d_m = {
            let mw = m as f64 * omega;
            Complex64::new(dc.omega0 * dc.omega0 - mw * mw, dc.delta * dc.omega0 * mw)
        };
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..stack.n_nodes() {
            let lhs = d_m * stack.volume[m as usize][i];
            let rhs = f_v[i] - dc.mu * stack.pressure[m as usize][i];
            num = num.max((lhs - rhs).norm());
            den = den.max(lhs.norm()).max(rhs.norm());
        }
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    if stack.formulation == Formulation::RealFull {
        let f_v0 = convolve_real_zero(&stack.volume, n_max, WeightRule::TwoSided, |a, b| {
            volume_kernel(a, b, omega, dc)
        });
        let w0sq = dc.omega0 * dc.omega0;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..stack.n_nodes() {
            let lhs = w0sq * stack.volume[0][i].re;
            let rhs = f_v0[i].re;
            num = num.max((lhs - rhs).abs());
            den = den.max(lhs.abs()).max(rhs.abs());
        }
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    Some(worst)
}
