//! Frequency-domain solver for time-periodic nonlinear acoustics in bubbly
//! liquids.
//!
//! The pressure field of a damped Westervelt equation is coupled to a field
//! of microbubble volume oscillators. Looking for T-periodic states turns the
//! time-dependent problem into a cascade of complex Helmholtz problems, one
//! per harmonic of the driving frequency, which this crate assembles with P1
//! finite elements on a disk and solves with a sparse complex LU
//! factorization. Harmonic-balance algebra, an independent periodic-ODE
//! oracle, meshing, post-processing, and experiment configuration round out
//! the toolkit; the `cavwave` binary drives it from JSON configs.

pub mod cascade;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod params;
pub mod periodic_ode;
pub mod postprocess;
pub mod sparse;

pub use error::{Error, Result};
pub use params::{DerivedConstants, NumberDensity, SimulationParams};
