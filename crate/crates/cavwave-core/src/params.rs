//! Physical parameters, derived constants, and the harmonic-dependent
//! coefficients used by every solver stage.
//!
//! The driving model couples a damped Westervelt equation for the acoustic
//! pressure to a volume oscillator for the microbubble field,
//!
//! ```text
//! p_tt - c^2 Δp - b Δp_t = η (p^2)_tt + c^2 ρ0 n0(x) v_tt + h_tt
//! v_tt + δ ω0 v_t + ω0^2 v = ζ v^2 + ξ (2 v v_tt + v_t^2) - μ p
//! ```
//!
//! with impedance boundary condition `β p_t + γ p + ∇p·n = 0`. Every
//! constant here is SI.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bubble number density: either one value for the whole domain or one value
/// per mesh node.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum NumberDensity {
    Uniform(f64),
    Nodal(Vec<f64>),
}

impl NumberDensity {
    pub fn is_zero(&self) -> bool {
        match self {
            NumberDensity::Uniform(v) => *v == 0.0,
            NumberDensity::Nodal(v) => v.iter().all(|x| *x == 0.0),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            NumberDensity::Uniform(v) => *v,
            NumberDensity::Nodal(v) => v.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            NumberDensity::Uniform(v) => *v,
            NumberDensity::Nodal(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Nodal values on a mesh with `n_nodes` nodes.
    pub fn nodal_values(&self, n_nodes: usize) -> Result<Vec<f64>> {
        match self {
            NumberDensity::Uniform(v) => Ok(vec![*v; n_nodes]),
            NumberDensity::Nodal(v) => {
                if v.len() != n_nodes {
                    return Err(Error::InvalidParameter(format!(
                        "nodal n0 has {} entries but the mesh has {} nodes",
                        v.len(),
                        n_nodes
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// All physical inputs of the model. Immutable once validated.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationParams {
    /// Speed of sound in the carrier liquid [m/s].
    pub c: f64,
    /// Sound diffusivity [m^2/s].
    pub b: f64,
    /// Mixture mass density [kg/m^3].
    pub rho0: f64,
    /// Acoustic nonlinearity parameter [-].
    pub beta_a: f64,
    /// Equilibrium bubble radius [m].
    pub r0: f64,
    /// Bubble number density [1/m^3], constant or nodal.
    pub n0: NumberDensity,
    /// Ambient pressure inside the bubble [Pa].
    pub p0: f64,
    /// Adiabatic exponent of the bubble gas [-].
    pub kappa: f64,
    /// Kinematic viscosity of the liquid [m^2/s].
    pub nu: f64,
    /// Boundary coefficient beta [s/m].
    pub beta_bc: f64,
    /// Boundary coefficient gamma [-].
    pub gamma_bc: f64,
    /// Driving angular frequency [rad/s].
    pub omega: f64,
}

impl SimulationParams {
    /// Reference parameter set: water with 2 um bubbles at moderate
    /// concentration, driven at the bubble resonance frequency, with
    /// absorbing-type boundary coefficients beta = 1/c and gamma = 1.
    pub fn reference() -> Self {
        let mut p = SimulationParams {
            c: 1500.0,
            b: 1e-3,
            rho0: 1000.0,
            beta_a: 3.5,
            r0: 2e-6,
            n0: NumberDensity::Uniform(1e12),
            p0: 100.0,
            kappa: 1.4,
            nu: 8.9e-6,
            beta_bc: 1.0 / 1500.0,
            gamma_bc: 1.0,
            omega: 0.0,
        };
        // Drive at resonance by default.
        let dc = derive_constants(&p).expect("reference parameters are valid");
        p.omega = dc.omega0;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("b", self.b),
            ("rho0", self.rho0),
            ("r0", self.r0),
            ("p0", self.p0),
            ("beta_bc", self.beta_bc),
            ("gamma_bc", self.gamma_bc),
            ("omega", self.omega),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "nu must be nonnegative, got {}",
                self.nu
            )));
        }
        if self.n0.min() < 0.0 {
            return Err(Error::InvalidParameter(
                "n0 must be nonnegative pointwise".into(),
            ));
        }
        if !self.beta_a.is_finite() || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("beta_a and kappa must be finite".into()));
        }
        Ok(())
    }
}

/// Constants derived from [`SimulationParams`]; pure functions of the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Bubble natural frequency omega0 = sqrt(3 kappa p0 / (rho0 r0^2)) [rad/s].
    pub omega0: f64,
    /// Viscous damping coefficient delta = 4 nu / (omega0 r0^2) [-].
    pub delta: f64,
    /// Equilibrium bubble volume v0 = (4 pi / 3) r0^3 [m^3].
    pub v0: f64,
    /// Pressure-volume coupling mu = 4 pi r0 / rho0.
    pub mu: f64,
    /// Quadratic stiffness zeta = (kappa + 1) omega0^2 / (2 v0).
    pub zeta: f64,
    /// Inertial nonlinearity xi = 1 / (6 v0).
    pub xi: f64,
    /// Westervelt nonlinearity eta = beta_a / (rho0 c^2) [1/Pa].
    pub eta: f64,
}

/// Evaluate every derived constant from the primitive inputs.
pub fn derive_constants(params: &SimulationParams) -> Result<DerivedConstants> {
    let radicand = 3.0 * params.kappa * params.p0 / (params.rho0 * params.r0 * params.r0);
    if !(radicand > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "natural-frequency radicand must be positive, got {radicand}"
        )));
    }
    let omega0 = radicand.sqrt();
    let delta = 4.0 * params.nu / (omega0 * params.r0 * params.r0);
    let v0 = 4.0 * std::f64::consts::PI / 3.0 * params.r0.powi(3);
    let mu = 4.0 * std::f64::consts::PI * params.r0 / params.rho0;
    let zeta = (params.kappa + 1.0) * omega0 * omega0 / (2.0 * v0);
    let xi = 1.0 / (6.0 * v0);
    let eta = params.beta_a / (params.rho0 * params.c * params.c);
    Ok(DerivedConstants {
        omega0,
        delta,
        v0,
        mu,
        zeta,
        xi,
        eta,
    })
}

/// Transfer coefficient of the linearized volume oscillator at harmonic `m`:
/// `alpha_m = 1 / (-m^2 w^2 + i m delta omega0 w + omega0^2)`.
pub fn alpha_m(m: u32, omega: f64, dc: &DerivedConstants) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::InvalidParameter("alpha_m requires m >= 1".into()));
    }
    let mw = m as f64 * omega;
    let den = Complex64::new(
        dc.omega0 * dc.omega0 - mw * mw,
        m as f64 * dc.delta * dc.omega0 * omega,
    );
    if den.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "alpha_m denominator vanishes (undamped resonance)".into(),
        ));
    }
    Ok(den.inv())
}

/// The n0-independent parts of the Helmholtz coupling coefficients:
/// `frak_a = mu rho0 n0 * gain_a`, `frak_b = mu rho0 n0 * gain_b`.
///
/// Splitting the pointwise factor `mu rho0 n0(x)` off lets one weighted mass
/// matrix serve every harmonic index.
pub fn frak_gains(m: u32, omega: f64, dc: &DerivedConstants) -> (f64, f64) {
    let mw = m as f64 * omega;
    let s = dc.omega0 * dc.omega0 - mw * mw;
    let d = s * s + (m as f64 * dc.delta * dc.omega0 * omega).powi(2);
    let gain_a = mw * mw * s / d;
    let gain_b = mw * mw * mw * dc.delta * dc.omega0 / d;
    (gain_a, gain_b)
}

/// Full coupling coefficients for a pointwise density value.
pub fn frak_coeffs(
    m: u32,
    omega: f64,
    params: &SimulationParams,
    dc: &DerivedConstants,
    n0_point: f64,
) -> (f64, f64) {
    let (ga, gb) = frak_gains(m, omega, dc);
    let s = dc.mu * params.rho0 * n0_point;
    (s * ga, s * gb)
}

/// Effective two-harmonic constants: complex wave speeds for m = 1, 2 and the
/// effective nonlinearity addition `beta_tilde`.
///
/// `1/c_tilde_m^2 = 1/c^2 + rho0 n0 mu alpha_m` and
/// `beta_tilde = c^4 rho0^2 n0 (zeta - 3 xi omega^2) mu^2 alpha_1^2 alpha_2`.
pub fn effective_two_harmonic(
    params: &SimulationParams,
    dc: &DerivedConstants,
    n0_uniform: f64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let omega = params.omega;
    let a1 = alpha_m(1, omega, dc)?;
    let a2 = alpha_m(2, omega, dc)?;
    let mut speeds = [Complex64::default(); 2];
    for (idx, am) in [a1, a2].into_iter().enumerate() {
        let inv_sq = Complex64::new(1.0 / (params.c * params.c), 0.0)
            + params.rho0 * n0_uniform * dc.mu * am;
        if inv_sq.norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "effective wave speed diverges: 1/c_tilde^2 = 0".into(),
            ));
        }
        speeds[idx] = inv_sq.sqrt().inv();
    }
    let zt = dc.zeta - 3.0 * dc.xi * omega * omega;
    let beta_tilde = params.c.powi(4) * params.rho0 * params.rho0 * n0_uniform * zt
        * dc.mu
        * dc.mu
        * a1
        * a1
        * a2;
    Ok((speeds[0], speeds[1], beta_tilde))
}

/// Gas volume fraction `v0 * n0` (diagnostic; should stay well below 1).
pub fn gas_volume_fraction(params: &SimulationParams, dc: &DerivedConstants) -> f64 {
    dc.v0 * params.n0.max()
}

/// Symmetric quadratic kernel of the volume oscillator,
/// `K(a, b) = zeta - xi omega^2 (a^2 + a b + b^2)`, for signed harmonic
/// indices `a`, `b`. Conjugated factors enter with a negative index.
pub fn volume_kernel(a: i64, b: i64, omega: f64, dc: &DerivedConstants) -> f64 {
    let q = (a * a + a * b + b * b) as f64;
    dc.zeta - dc.xi * omega * omega * q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> (SimulationParams, DerivedConstants) {
        let p = SimulationParams::reference();
        let dc = derive_constants(&p).unwrap();
        (p, dc)
    }

    #[test]
    fn derived_constants_match_hand_computed_values() {
        let (_, dc) = reference();
        // Frozen from an independent evaluation of the closed-form formulas.
        assert_relative_eq!(dc.omega0, 3.240370349203930e5, max_relative = 1e-14);
        assert_relative_eq!(dc.delta, 2.746599629325236e1, max_relative = 1e-14);
        assert_relative_eq!(dc.v0, 3.351032163829112e-17, max_relative = 1e-14);
        assert_relative_eq!(dc.mu, 2.513274122871834e-8, max_relative = 1e-14);
        assert_relative_eq!(dc.zeta, 3.760035530546027e27, max_relative = 1e-14);
        assert_relative_eq!(dc.xi, 4.973591971621730e15, max_relative = 1e-14);
        assert_relative_eq!(dc.eta, 1.555555555555555e-9, max_relative = 1e-14);
    }

    #[test]
    fn inviscid_limit_has_zero_damping() {
        let mut p = SimulationParams::reference();
        p.nu = 0.0;
        let dc = derive_constants(&p).unwrap();
        assert_eq!(dc.delta, 0.0);
    }

    #[test]
    fn derivation_is_deterministic() {
        let (p, dc) = reference();
        let dc2 = derive_constants(&p).unwrap();
        assert_eq!(dc, dc2);
    }

    #[test]
    fn alpha_1_at_resonance_is_negative_imaginary() {
        let (p, dc) = reference();
        let a1 = alpha_m(1, p.omega, &dc).unwrap();
        // At w = omega0 the real part of the denominator collapses, leaving
        // alpha_1 = -i / (delta omega0^2).
        assert_relative_eq!(a1.re, 0.0, epsilon = 1e-25);
        assert_relative_eq!(a1.im, -3.467491010384088e-13, max_relative = 1e-14);
        let closed = -Complex64::i() / (dc.delta * dc.omega0 * dc.omega0);
        assert!((a1 - closed).norm() <= 1e-15 * closed.norm());
    }

    #[test]
    fn alpha_m_static_limit() {
        let (_, dc) = reference();
        for m in 1..=6u32 {
            let a = alpha_m(m, 1e-9, &dc).unwrap();
            assert_relative_eq!(a.re, 1.0 / (dc.omega0 * dc.omega0), max_relative = 1e-8);
        }
    }

    #[test]
    fn alpha_m_rejects_m_zero() {
        let (p, dc) = reference();
        assert!(alpha_m(0, p.omega, &dc).is_err());
    }

    #[test]
    fn alpha_denominator_lower_bound() {
        // |denominator| >= m delta omega0 w for all m when delta > 0.
        let (p, dc) = reference();
        for m in 1..=12u32 {
            for wf in [0.3, 0.9, 1.0, 1.7, 4.2] {
                let w = wf * p.omega;
                let a = alpha_m(m, w, &dc).unwrap();
                let bound = m as f64 * dc.delta * dc.omega0 * w;
                assert!(1.0 / a.norm() >= bound * (1.0 - 1e-13));
            }
        }
    }

    #[test]
    fn frak_coeffs_resonance_values() {
        let (p, dc) = reference();
        let (fa1, fb1) = frak_coeffs(1, dc.omega0, &p, &dc, 1e12);
        // At resonance the a-coefficient vanishes and b collapses to
        // mu rho0 n0 / delta.
        assert_relative_eq!(fa1, 0.0, epsilon = 1e-9);
        assert_relative_eq!(fb1, 9.150493199073490e5, max_relative = 1e-13);
        let (fa2, fb2) = frak_coeffs(2, dc.omega0, &p, &dc, 1e12);
        assert_relative_eq!(fa2, -9.964993e4, max_relative = 1e-6);
        assert_relative_eq!(fb2, 1.824656e6, max_relative = 1e-6);
    }

    #[test]
    fn frak_b_nonnegative_and_a_sign_follows_resonance() {
        let (p, dc) = reference();
        for m in 1..=8u32 {
            for wf in [0.2, 0.5, 0.99, 1.01, 3.0] {
                let w = wf * dc.omega0 / m as f64;
                let (fa, fb) = frak_coeffs(m, w, &p, &dc, 1e12);
                assert!(fb >= 0.0);
                let s = dc.omega0 * dc.omega0 - (m as f64 * w).powi(2);
                assert_eq!(fa > 0.0, s > 0.0, "m={m} wf={wf}");
            }
        }
    }

    #[test]
    fn frak_coeffs_vanish_without_bubbles() {
        let (p, dc) = reference();
        let (fa, fb) = frak_coeffs(3, p.omega, &p, &dc, 0.0);
        assert_eq!(fa, 0.0);
        assert_eq!(fb, 0.0);
    }

    #[test]
    fn consistency_between_alpha_and_frak() {
        // mu rho0 n0 m^2 w^2 alpha_m = frak_a - i frak_b.
        let (p, dc) = reference();
        for m in 1..=6u32 {
            for wf in [0.4, 1.0, 2.3] {
                let w = wf * dc.omega0;
                let a = alpha_m(m, w, &dc).unwrap();
                let (fa, fb) = frak_coeffs(m, w, &p, &dc, 1e12);
                let lhs = dc.mu * p.rho0 * 1e12 * (m as f64 * w).powi(2) * a;
                let rhs = Complex64::new(fa, -fb);
                assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
            }
        }
    }

    #[test]
    fn two_harmonic_constants_reduce_without_bubbles() {
        let (p, dc) = reference();
        let (c1, c2, bt) = effective_two_harmonic(&p, &dc, 0.0).unwrap();
        assert_relative_eq!(c1.re, p.c, max_relative = 1e-13);
        assert_relative_eq!(c2.re, p.c, max_relative = 1e-13);
        assert!(c1.im.abs() < 1e-10 && c2.im.abs() < 1e-10);
        assert_eq!(bt, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_harmonic_speed_has_damping_part() {
        let (p, dc) = reference();
        let (c1, _, _) = effective_two_harmonic(&p, &dc, 1e12).unwrap();
        assert!(c1.im != 0.0);
    }

    #[test]
    fn beta_tilde_vanishes_at_kernel_zero() {
        let (mut p, dc) = reference();
        // zeta = 3 xi omega^2 zeroes the combination driving beta_tilde.
        p.omega = (dc.zeta / (3.0 * dc.xi)).sqrt();
        let (_, _, bt) = effective_two_harmonic(&p, &dc, 1e12).unwrap();
        assert!(bt.norm() <= 1e-16 * dc.zeta * dc.mu * dc.mu);
    }

    #[test]
    fn gas_fraction_values() {
        let (mut p, dc) = reference();
        assert_relative_eq!(
            gas_volume_fraction(&p, &dc),
            3.351032163829112e-5,
            max_relative = 1e-13
        );
        p.n0 = NumberDensity::Uniform(0.0);
        assert_eq!(gas_volume_fraction(&p, &dc), 0.0);
        p.n0 = NumberDensity::Uniform(1.0 / dc.v0);
        assert_relative_eq!(gas_volume_fraction(&p, &dc), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn volume_kernel_matches_printed_weight_patterns() {
        let (p, dc) = reference();
        let w = p.omega;
        // Symmetrized sum-frequency pattern: the average of the
        // (m-l)(2m-l) weight over l and m-l equals the symmetric kernel.
        for m in 2..=8i64 {
            for l in 1..m {
                let printed = |l: i64| ((m - l) * (2 * m - l)) as f64;
                let avg = 0.5 * (printed(l) + printed(m - l));
                let sym = ((l * l + l * (m - l) + (m - l) * (m - l))) as f64;
                assert_relative_eq!(avg, sym, max_relative = 1e-15);
                let _ = volume_kernel(l, m - l, w, &dc);
            }
        }
        // Difference-frequency pattern: (k^2 + 3 m^2)/4 at k = m + 2j equals
        // the kernel at indices (-j, m+j).
        for m in 0..=6i64 {
            for j in 1..=6i64 {
                let k = m + 2 * j;
                let printed = dc.zeta - dc.xi * w * w * ((k * k + 3 * m * m) as f64) / 4.0;
                let kern = volume_kernel(-j, m + j, w, &dc);
                assert_relative_eq!(printed, kern, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut p = SimulationParams::reference();
        p.c = -1.0;
        assert!(p.validate().is_err());
        let mut p = SimulationParams::reference();
        p.n0 = NumberDensity::Nodal(vec![1.0, -2.0]);
        assert!(p.validate().is_err());
        let mut p = SimulationParams::reference();
        p.nu = f64::NAN;
        assert!(p.validate().is_err());
        assert!(SimulationParams::reference().validate().is_ok());
    }

    #[test]
    fn nodal_density_length_check() {
        let n0 = NumberDensity::Nodal(vec![1.0; 5]);
        assert!(n0.nodal_values(5).is_ok());
        assert!(n0.nodal_values(6).is_err());
        let u = NumberDensity::Uniform(2.0);
        assert_eq!(u.nodal_values(3).unwrap(), vec![2.0; 3]);
    }
}
