//! Declarative experiment configuration.
//!
//! Experiments are described by a JSON document with four blocks: physical
//! parameters, mesh source, run settings, and output settings. Unknown keys
//! are rejected so typos surface as errors naming the offending key. All
//! quantities are SI unless a field name says otherwise (`frequency_mhz`,
//! `h_target_mm`, number density `per_ml`).

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use cavwave_core::cascade::{Formulation, SourceSpec};
use cavwave_core::mesh::{generate_disk, read_mesh_text, read_msh, Mesh};
use cavwave_core::params::{NumberDensity, SimulationParams};
use cavwave_core::{Error, Result};

/// Default number of time samples when maximising over one period.
pub const DEFAULT_N_SAMPLES: usize = 128;

/// Parsed experiment description plus the digest of the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub experiment: ExperimentConfig,
    /// SHA-256 of the raw configuration bytes, hex encoded. Stamped into
    /// every emitted file.
    pub hash: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub params: ParamsBlock,
    pub mesh: MeshBlock,
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
    /// Reserved for randomized tie-breaking; meshing is currently fully
    /// deterministic, so the seed only enters the provenance stamp.
    #[serde(default)]
    pub seed: u64,
}

/// Physical parameters; omitted fields keep the reference water/microbubble
/// values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub c: Option<f64>,
    pub b: Option<f64>,
    pub rho0: Option<f64>,
    pub beta_a: Option<f64>,
    pub r0: Option<f64>,
    pub p0: Option<f64>,
    pub kappa: Option<f64>,
    pub nu: Option<f64>,
    pub beta_bc: Option<f64>,
    pub gamma_bc: Option<f64>,
    /// Angular drive frequency [rad/s]. Mutually exclusive with
    /// `frequency_mhz`.
    pub omega: Option<f64>,
    /// Drive frequency in MHz, converted to omega = 2 pi f at the boundary.
    pub frequency_mhz: Option<f64>,
    pub n0: Option<NumberDensityConfig>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DensityUnit {
    /// Bubbles per cubic metre (SI).
    #[default]
    PerM3,
    /// Bubbles per millilitre; converted by a factor 10^6.
    PerMl,
}

impl DensityUnit {
    fn to_si(self, value: f64) -> f64 {
        match self {
            DensityUnit::PerM3 => value,
            DensityUnit::PerMl => value * 1e6,
        }
    }
}

/// Bubble number density: either one uniform value or a file of nodal
/// values (one per mesh node, whitespace separated).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumberDensityConfig {
    pub value: Option<f64>,
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub unit: DensityUnit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    /// Disk radius [m] for generated meshes.
    pub radius: Option<f64>,
    /// Target edge length [m] for generated meshes.
    pub h_target: Option<f64>,
    /// Target edge length in millimetres.
    pub h_target_mm: Option<f64>,
    /// Path to an existing mesh (.msh or the plain-text format).
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Scheme tag: real-full, real-v0zero, complex-direct,
    /// complex-linearized, or two-harmonic.
    #[serde(default = "default_formulation")]
    pub formulation: String,
    pub n_max: u32,
    pub amplitude: f64,
    /// Monopole source radius [m].
    #[serde(default = "default_r_delta")]
    pub r_delta: f64,
    /// Monopole source centre [m].
    #[serde(default)]
    pub source_center: [f64; 2],
    /// Extra fixed-point sweeps after the level cascade.
    #[serde(default)]
    pub polish: u32,
    /// Time samples for the in-time maximum.
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
}

fn default_formulation() -> String {
    "complex-direct".to_string()
}

fn default_r_delta() -> f64 {
    0.004
}

fn default_n_samples() -> usize {
    DEFAULT_N_SAMPLES
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_output_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default)]
    pub vtk: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_output_dir(),
            csv: true,
            vtk: false,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Parse and statically validate a configuration document.
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_slice(bytes)
            .map_err(|e| Error::Config(format!("configuration rejected: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a configuration file, returning it together with the SHA-256 of
    /// the raw bytes.
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let bytes = fs::read(path).map_err(|e| {
            Error::Config(format!("cannot read configuration {}: {e}", path.display()))
        })?;
        let experiment = Self::from_json_bytes(&bytes)?;
        let hash = format!("{:x}", Sha256::digest(&bytes));
        Ok(LoadedConfig { experiment, hash })
    }

    fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        let generated = m.radius.is_some() || m.h_target.is_some() || m.h_target_mm.is_some();
        if generated && m.path.is_some() {
            return Err(Error::Config(
                "mesh: give either generation settings (radius, h_target) or path, not both"
                    .into(),
            ));
        }
        if m.path.is_none() && m.h_target.is_none() && m.h_target_mm.is_none() {
            return Err(Error::Config(
                "mesh: one of h_target, h_target_mm, or path is required".into(),
            ));
        }
        if m.h_target.is_some() && m.h_target_mm.is_some() {
            return Err(Error::Config(
                "mesh: h_target and h_target_mm are mutually exclusive".into(),
            ));
        }
        if self.params.omega.is_some() && self.params.frequency_mhz.is_some() {
            return Err(Error::Config(
                "params: omega and frequency_mhz are mutually exclusive".into(),
            ));
        }
        if let Some(n0) = &self.params.n0 {
            match (n0.value, &n0.file) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => {
                    return Err(Error::Config(
                        "params.n0: exactly one of value or file is required".into(),
                    ))
                }
            }
        }
        if !(1..=64).contains(&self.run.n_max) {
            return Err(Error::Config(format!(
                "run.n_max: {} outside the supported range 1..=64",
                self.run.n_max
            )));
        }
        if !self.run.amplitude.is_finite() {
            return Err(Error::Config(format!(
                "run.amplitude: {} is not finite",
                self.run.amplitude
            )));
        }
        if !(self.run.r_delta > 0.0) || !self.run.r_delta.is_finite() {
            return Err(Error::Config(format!(
                "run.r_delta: {} must be positive and finite",
                self.run.r_delta
            )));
        }
        // Fail early on unknown scheme tags.
        self.formulation()?;
        Ok(())
    }

    /// The requested scheme.
    pub fn formulation(&self) -> Result<Formulation> {
        Formulation::from_str(&self.run.formulation)
            .map_err(|e| Error::Config(format!("run.formulation: {e}")))
    }

    /// The monopole source description.
    pub fn source(&self) -> SourceSpec {
        SourceSpec {
            r_delta: self.run.r_delta,
            center: self.run.source_center,
        }
    }

    /// Build or read the mesh this configuration refers to.
    pub fn build_mesh(&self) -> Result<Mesh> {
        if let Some(path) = &self.mesh.path {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "mesh.path: {} does not exist",
                    path.display()
                )));
            }
            return match path.extension().and_then(|e| e.to_str()) {
                Some("msh") => read_msh(path),
                _ => read_mesh_text(path),
            };
        }
        let radius = self.mesh.radius.unwrap_or(0.2);
        let h = match (self.mesh.h_target, self.mesh.h_target_mm) {
            (Some(h), None) => h,
            (None, Some(mm)) => mm * 1e-3,
            _ => unreachable!("validated: exactly one h source"),
        };
        generate_disk(radius, h)
    }

    /// Edge-length tag recorded in output tables: the requested target for
    /// generated meshes, the measured maximum edge for loaded ones.
    pub fn h_label(&self, mesh: &Mesh) -> f64 {
        match (self.mesh.h_target, self.mesh.h_target_mm) {
            (Some(h), _) => h,
            (_, Some(mm)) => mm * 1e-3,
            _ => mesh.statistics().h_max,
        }
    }

    /// Resolve the physical parameter set against a mesh (nodal density
    /// files must match its node count).
    pub fn simulation_params(&self, mesh: &Mesh) -> Result<SimulationParams> {
        let mut p = SimulationParams::reference();
        let blk = &self.params;
        if let Some(v) = blk.c {
            p.c = v;
        }
        if let Some(v) = blk.b {
            p.b = v;
        }
        if let Some(v) = blk.rho0 {
            p.rho0 = v;
        }
        if let Some(v) = blk.beta_a {
            p.beta_a = v;
        }
        if let Some(v) = blk.r0 {
            p.r0 = v;
        }
        if let Some(v) = blk.p0 {
            p.p0 = v;
        }
        if let Some(v) = blk.kappa {
            p.kappa = v;
        }
        if let Some(v) = blk.nu {
            p.nu = v;
        }
        if let Some(v) = blk.beta_bc {
            p.beta_bc = v;
        }
        if let Some(v) = blk.gamma_bc {
            p.gamma_bc = v;
        }
        if let Some(v) = blk.omega {
            p.omega = v;
        }
        if let Some(f) = blk.frequency_mhz {
            p.omega = 2.0 * std::f64::consts::PI * f * 1e6;
        }
        if let Some(n0) = &blk.n0 {
            p.n0 = match (n0.value, &n0.file) {
                (Some(v), None) => NumberDensity::Uniform(n0.unit.to_si(v)),
                (None, Some(path)) => {
                    let text = fs::read_to_string(path).map_err(|e| {
                        Error::Config(format!(
                            "params.n0.file: cannot read {}: {e}",
                            path.display()
                        ))
                    })?;
                    let values: Vec<f64> = text
                        .split_whitespace()
                        .map(|tok| {
                            tok.parse::<f64>().map_err(|_| {
                                Error::Config(format!(
                                    "params.n0.file: {tok:?} is not a number"
                                ))
                            })
                        })
                        .collect::<Result<_>>()?;
                    if values.len() != mesh.n_nodes() {
                        return Err(Error::Config(format!(
                            "params.n0.file: {} values for a mesh with {} nodes",
                            values.len(),
                            mesh.n_nodes()
                        )));
                    }
                    NumberDensity::Nodal(values.iter().map(|v| n0.unit.to_si(*v)).collect())
                }
                _ => unreachable!("validated: exactly one density source"),
            };
        }
        p.validate()?;
        Ok(p)
    }
}
