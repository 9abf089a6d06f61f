//! Piecewise-linear finite elements on triangle meshes.
//!
//! Four bilinear forms cover everything the harmonic solver needs: the
//! stiffness form, the mass form, a mass form weighted by a nodal
//! coefficient field, and the boundary mass form. Each harmonic's complex
//! system matrix is a scalar combination of these four real matrices, so
//! assembly happens once per mesh regardless of how many harmonics are
//! solved.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::{frak_gains, DerivedConstants, SimulationParams};
use crate::sparse::Csr;

/// The four real bilinear forms assembled on a mesh.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    /// Gradient-gradient form.
    pub stiffness: Csr<f64>,
    /// L2 mass form.
    pub mass: Csr<f64>,
    /// Mass form with the nodal weight field (here: the coupling
    /// coefficient times the bubble number density).
    pub weighted_mass: Csr<f64>,
    /// Boundary mass form over the boundary edges.
    pub boundary: Csr<f64>,
    n: usize,
}

impl AssembledForms {
    pub fn n(&self) -> usize {
        self.n
    }
}

/// Assemble all four forms. `weight` is a nodal field interpolated
/// piecewise linearly; the weighted mass uses the edge-midpoint quadrature
/// rule, which integrates the product of the weight with products of shape
/// functions exactly enough for second-order convergence.
pub fn assemble_forms(mesh: &Mesh, weight: &[f64]) -> Result<AssembledForms> {
    let n = mesh.n_nodes();
    if weight.len() != n {
        return Err(Error::Dimension(format!(
            "weight field has {} entries for {} nodes",
            weight.len(),
            n
        )));
    }

    let stats_scale = {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.nodes() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    };
    let area_floor = 1e-14 * stats_scale * stats_scale;

    let n_tri = mesh.n_triangles();
    let mut k_trip = Vec::with_capacity(9 * n_tri);
    let mut m_trip = Vec::with_capacity(9 * n_tri);
    let mut w_trip = Vec::with_capacity(9 * n_tri);

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p: [[f64; 2]; 3] = [
            mesh.nodes()[tri[0]],
            mesh.nodes()[tri[1]],
            mesh.nodes()[tri[2]],
        ];
        let b = [
            p[1][1] - p[2][1],
            p[2][1] - p[0][1],
            p[0][1] - p[1][1],
        ];
        let c = [
            p[2][0] - p[1][0],
            p[0][0] - p[2][0],
            p[1][0] - p[0][0],
        ];
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let area = 0.5 * area2;
        if !(area > area_floor) {
            return Err(Error::Mesh(format!(
                "element {t} is degenerate (area {area:.3e})"
            )));
        }

        // Edge-midpoint quadrature for the weighted mass: the midpoint of
        // edge (a, b) carries shape values 1/2 at a and b and the average
        // of the nodal weights there.
        let w = [weight[tri[0]], weight[tri[1]], weight[tri[2]]];
        let mid_w = [
            0.5 * (w[0] + w[1]),
            0.5 * (w[1] + w[2]),
            0.5 * (w[2] + w[0]),
        ];
        // Pairs of local nodes sharing each midpoint.
        const EDGE: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

        for i in 0..3 {
            for j in 0..3 {
                let kij = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
                k_trip.push((tri[i], tri[j], kij));
                let mij = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                m_trip.push((tri[i], tri[j], mij));
            }
        }
        for (e, pair) in EDGE.iter().enumerate() {
            let contribution = area / 3.0 * mid_w[e] * 0.25;
            for &i in pair {
                for &j in pair {
                    w_trip.push((tri[i], tri[j], contribution));
                }
            }
        }
    }

    let mut b_trip = Vec::with_capacity(4 * mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let pa = mesh.nodes()[e[0]];
        let pb = mesh.nodes()[e[1]];
        let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
        b_trip.push((e[0], e[0], len / 3.0));
        b_trip.push((e[1], e[1], len / 3.0));
        b_trip.push((e[0], e[1], len / 6.0));
        b_trip.push((e[1], e[0], len / 6.0));
    }

    Ok(AssembledForms {
        stiffness: Csr::from_triplets(n, n, &k_trip)?,
        mass: Csr::from_triplets(n, n, &m_trip)?,
        weighted_mass: Csr::from_triplets(n, n, &w_trip)?,
        boundary: Csr::from_triplets(n, n, &b_trip)?,
        n,
    })
}

/// Scalar coefficients multiplying the four forms in the system matrix of
/// harmonic `m`.
#[derive(Debug, Clone, Copy)]
pub struct HelmholtzCoefficients {
    pub stiffness: Complex64,
    pub mass: Complex64,
    pub weighted_mass: Complex64,
    pub boundary: Complex64,
}

/// Coefficients for harmonic `m` at angular frequency `omega`.
///
/// The matrix is `(1 + i m omega b / c^2) K - (m omega / c)^2 M
/// + (-g_a + i g_b) M_w + (1 + i m omega b / c^2)(i m omega beta + gamma) B`
/// where `g_a`, `g_b` split the oscillator transfer function into its
/// dispersive and dissipative parts.
pub fn helmholtz_coefficients(
    m: u32,
    omega: f64,
    params: &SimulationParams,
    dc: &DerivedConstants,
) -> Result<HelmholtzCoefficients> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "harmonic index 0 has no Helmholtz problem".into(),
        ));
    }
    let mw = m as f64 * omega;
    let damping = Complex64::new(1.0, mw * params.b / (params.c * params.c));
    let k = mw / params.c;
    let (g_a, g_b) = frak_gains(m, omega, dc);
    let robin = Complex64::new(params.gamma_bc, mw * params.beta_bc);
    Ok(HelmholtzCoefficients {
        stiffness: damping,
        mass: Complex64::new(-k * k, 0.0),
        weighted_mass: Complex64::new(-g_a, g_b),
        boundary: damping * robin,
    })
}

/// Assemble the complex system matrix for harmonic `m`.
pub fn assemble_helmholtz(
    forms: &AssembledForms,
    m: u32,
    omega: f64,
    params: &SimulationParams,
    dc: &DerivedConstants,
) -> Result<Csr<Complex64>> {
    let co = helmholtz_coefficients(m, omega, params, dc)?;
    Csr::combine(
        forms.n,
        &[
            (co.stiffness, &forms.stiffness),
            (co.mass, &forms.mass),
            (co.weighted_mass, &forms.weighted_mass),
            (co.boundary, &forms.boundary),
        ],
    )
}

/// Nodal values of the localized source profile: a raised-cosine bump of
/// radius `2 r_delta` around `center` with unit integral scaling `a`, peak
/// value `a / (2 r_delta)`.
pub fn monopole_profile(
    mesh: &Mesh,
    amplitude: f64,
    r_delta: f64,
    center: [f64; 2],
) -> Result<Vec<f64>> {
    if !(r_delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source radius must be positive, got {r_delta}"
        )));
    }
    Ok(mesh
        .nodes()
        .iter()
        .map(|p| {
            let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
            if r <= 2.0 * r_delta {
                amplitude / (4.0 * r_delta)
                    * (1.0 + (std::f64::consts::PI * r / (2.0 * r_delta)).cos())
            } else {
                0.0
            }
        })
        .collect())
}
