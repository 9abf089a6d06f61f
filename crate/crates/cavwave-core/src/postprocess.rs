//! Time-domain reconstruction and diagnostics for harmonic stacks.
//!
//! A solver run returns one complex nodal field per harmonic index. The
//! functions here turn those stacks back into real time-domain fields,
//! measure them in the finite element L2 norm, and reduce whole runs to
//! the scalar diagnostics the experiment harness writes to disk: the
//! L-infinity-in-time L2-in-space functional and the harmonic ratios
//! r_m = |p_m| / |p_1|.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::Csr;

/// Default number of uniform time samples per period used when maximising
/// over time. Enough for harmonic content far beyond the cut-off numbers
/// this library runs at.
pub const DEFAULT_TIME_SAMPLES: usize = 128;

/// Scalar summary of one solver run.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// max over sampled times of the FE L2 norm of the reconstructed field.
    pub qoi: f64,
    /// FE L2 norm of each harmonic, index 0 = mean mode.
    pub harmonic_norms: Vec<f64>,
    /// Ratios r_m = norms[m] / norms[1] for m = 1..=n_max (r_1 = 1).
    pub ratios: Vec<f64>,
}

/// Evaluate the real reconstruction Re(sum_m e^{i m omega t} u_m(x)) at one
/// instant, returning one value per node.
pub fn reconstruct_time(harmonics: &[Vec<Complex64>], omega: f64, t: f64) -> Result<Vec<f64>> {
    if !t.is_finite() || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "reconstruction time and frequency must be finite, got t = {t}, omega = {omega}"
        )));
    }
    let n = harmonics.first().map_or(0, Vec::len);
    let mut field = vec![0.0; n];
    for (m, coeffs) in harmonics.iter().enumerate() {
        if coeffs.len() != n {
            return Err(Error::Dimension(format!(
                "harmonic {m} has {} nodes, expected {n}",
                coeffs.len()
            )));
        }
        let phase = Complex64::from_polar(1.0, m as f64 * omega * t);
        for (f, c) in field.iter_mut().zip(coeffs) {
            *f += (c * phase).re;
        }
    }
    Ok(field)
}

/// Largest imaginary leakage of the two-sided synthesis, relative to the
/// field scale, maximised over the supplied times.
///
/// The two-sided sum u_0 + sum_{m>=1} (u_m e^{i m omega t} + conjugate)
/// is real by construction; anything left in the imaginary part measures
/// conjugate-symmetry damage in the stored stack.
pub fn reality_residue(harmonics: &[Vec<Complex64>], omega: f64, times: &[f64]) -> Result<f64> {
    let n = harmonics.first().map_or(0, Vec::len);
    let mut worst_im: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in times {
        let mut field = vec![Complex64::new(0.0, 0.0); n];
        for (m, coeffs) in harmonics.iter().enumerate() {
            if coeffs.len() != n {
                return Err(Error::Dimension(format!(
                    "harmonic {m} has {} nodes, expected {n}",
                    coeffs.len()
                )));
            }
            if m == 0 {
                for (f, c) in field.iter_mut().zip(coeffs) {
                    *f += c;
                }
            } else {
                let phase = Complex64::from_polar(1.0, m as f64 * omega * t);
                for (f, c) in field.iter_mut().zip(coeffs) {
                    *f += c * phase + (c * phase).conj();
                }
            }
        }
        for f in &field {
            worst_im = worst_im.max(f.im.abs());
            scale = scale.max(f.re.abs());
        }
    }
    if scale == 0.0 {
        Ok(worst_im)
    } else {
        Ok(worst_im / scale)
    }
}

/// FE L2 norm sqrt(u' M u) of a real nodal field.
pub fn l2_norm(mass: &Csr<f64>, u: &[f64]) -> Result<f64> {
    let mu = mass.matvec(u)?;
    let sq: f64 = u.iter().zip(&mu).map(|(a, b)| a * b).sum();
    Ok(sq.max(0.0).sqrt())
}

/// FE L2 norm sqrt(u^H M u) of a complex nodal field.
pub fn l2_norm_complex(mass: &Csr<f64>, u: &[Complex64]) -> Result<f64> {
    let mu = mass.matvec_complex(u)?;
    let sq: f64 = u.iter().zip(&mu).map(|(a, b)| (a.conj() * b).re).sum();
    Ok(sq.max(0.0).sqrt())
}

/// Maximum over `n_samples` uniform times in one period of the FE L2 norm
/// of the reconstructed field.
///
/// `n_samples` must be at least 4 N + 1 so the sampled maximum cannot sit
/// between the oscillations of the highest harmonic.
pub fn linf_l2(
    harmonics: &[Vec<Complex64>],
    mass: &Csr<f64>,
    omega: f64,
    n_samples: usize,
) -> Result<f64> {
    let n_max = harmonics.len().saturating_sub(1);
    if n_samples < 4 * n_max + 1 {
        return Err(Error::InvalidParameter(format!(
            "n_samples = {n_samples} undersamples {n_max} harmonics; need at least {}",
            4 * n_max + 1
        )));
    }
    if omega <= 0.0 || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "angular frequency must be positive and finite, got {omega}"
        )));
    }
    let period = 2.0 * std::f64::consts::PI / omega;
    let mut best: f64 = 0.0;
    for k in 0..n_samples {
        let t = period * k as f64 / n_samples as f64;
        let field = reconstruct_time(harmonics, omega, t)?;
        best = best.max(l2_norm(mass, &field)?);
    }
    Ok(best)
}

/// Relative difference |a - b| / b of two scalar diagnostics.
pub fn relative_difference(qoi_a: f64, qoi_b: f64) -> Result<f64> {
    if qoi_b == 0.0 {
        return Err(Error::InvalidParameter(
            "relative difference undefined against a zero reference".into(),
        ));
    }
    Ok((qoi_a - qoi_b).abs() / qoi_b)
}

/// Per-harmonic FE L2 norms of a stack, index 0 first.
pub fn harmonic_norms(harmonics: &[Vec<Complex64>], mass: &Csr<f64>) -> Result<Vec<f64>> {
    harmonics.iter().map(|u| l2_norm_complex(mass, u)).collect()
}

/// Harmonic ratios r_m = |u_m| / |u_1| for m = 1..=N (so r_1 = 1).
///
/// Fails when the fundamental vanishes.
pub fn harmonic_ratios(harmonics: &[Vec<Complex64>], mass: &Csr<f64>) -> Result<Vec<f64>> {
    if harmonics.len() < 2 {
        return Err(Error::InvalidParameter(
            "harmonic ratios need at least the fundamental mode".into(),
        ));
    }
    let norms = harmonic_norms(harmonics, mass)?;
    let fundamental = norms[1];
    if fundamental <= 0.0 {
        return Err(Error::InvalidParameter(
            "harmonic ratios undefined for a vanishing fundamental".into(),
        ));
    }
    Ok(norms[1..].iter().map(|n| n / fundamental).collect())
}

/// Nodewise |a - b| between two real fields, e.g. two reconstructions of
/// the same instant from different runs.
pub fn pointwise_difference(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "fields have {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect())
}

/// Full diagnostics of a pressure stack: quantity of interest, per-harmonic
/// norms, and ratios against the fundamental.
pub fn diagnostics(
    harmonics: &[Vec<Complex64>],
    mass: &Csr<f64>,
    omega: f64,
    n_samples: usize,
) -> Result<Diagnostics> {
    let qoi = linf_l2(harmonics, mass, omega, n_samples)?;
    let harmonic_norms = harmonic_norms(harmonics, mass)?;
    let ratios = harmonic_ratios(harmonics, mass)?;
    Ok(Diagnostics {
        qoi,
        harmonic_norms,
        ratios,
    })
}

/// Provenance header stamped into every emitted file: a digest of the
/// configuration that produced it plus the library version.
#[derive(Debug, Clone)]
pub struct FileStamp {
    /// Hex digest of the canonical configuration bytes.
    pub config_hash: String,
    /// Version of the emitting binary or library.
    pub version: String,
    /// Extra key = value metadata lines (e.g. bubble_free = true).
    pub extra: Vec<(String, String)>,
}

impl FileStamp {
    /// Stamp with no extra metadata.
    pub fn new(config_hash: impl Into<String>, version: impl Into<String>) -> Self {
        FileStamp {
            config_hash: config_hash.into(),
            version: version.into(),
            extra: Vec::new(),
        }
    }

    fn comment_lines(&self, prefix: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("{prefix} config_hash = {}\n", self.config_hash));
        out.push_str(&format!("{prefix} version = {}\n", self.version));
        for (k, v) in &self.extra {
            out.push_str(&format!("{prefix} {k} = {v}\n"));
        }
        out
    }
}

/// One row of the diagnostics table written by the experiment harness.
#[derive(Debug, Clone)]
pub struct DiagnosticsRow {
    pub run_id: String,
    pub formulation: String,
    pub n_max: u32,
    pub amplitude: f64,
    pub h_fem: f64,
    pub qoi: f64,
    /// Ratios r_2..r_6; missing harmonics are written as 0.
    pub ratios: [f64; 5],
    pub wall_time_s: f64,
}

impl DiagnosticsRow {
    /// Assemble a row from computed diagnostics. Ratios beyond the stack's
    /// cut-off are reported as zero.
    pub fn from_diagnostics(
        run_id: impl Into<String>,
        formulation: impl Into<String>,
        n_max: u32,
        amplitude: f64,
        h_fem: f64,
        diag: &Diagnostics,
        wall_time_s: f64,
    ) -> Self {
        let mut ratios = [0.0; 5];
        for (i, slot) in ratios.iter_mut().enumerate() {
            // diag.ratios[0] is r_1; r_{i+2} sits at index i + 1.
            if let Some(r) = diag.ratios.get(i + 1) {
                *slot = *r;
            }
        }
        DiagnosticsRow {
            run_id: run_id.into(),
            formulation: formulation.into(),
            n_max,
            amplitude,
            h_fem,
            qoi: diag.qoi,
            ratios,
            wall_time_s,
        }
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the diagnostics table as CSV: '#'-prefixed provenance comments,
/// one header line, then one line per row with 17 significant digits, '.'
/// decimal separator, LF line endings.
pub fn write_diagnostics_csv<W: Write>(
    out: &mut W,
    stamp: &FileStamp,
    rows: &[DiagnosticsRow],
) -> Result<()> {
    let mut text = stamp.comment_lines("#");
    text.push_str("run_id,formulation,N,a,h_fem,qoi,r_2,r_3,r_4,r_5,r_6,wall_time_s\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.run_id,
            row.formulation,
            row.n_max,
            fmt_float(row.amplitude),
            fmt_float(row.h_fem),
            fmt_float(row.qoi),
            fmt_float(row.ratios[0]),
            fmt_float(row.ratios[1]),
            fmt_float(row.ratios[2]),
            fmt_float(row.ratios[3]),
            fmt_float(row.ratios[4]),
            fmt_float(row.wall_time_s),
        ));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Write a generic two-dimensional table as CSV with the same formatting
/// rules as the diagnostics table. `columns` names the header; each row
/// must have the same length as `columns`.
pub fn write_table_csv<W: Write>(
    out: &mut W,
    stamp: &FileStamp,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut text = stamp.comment_lines("#");
    text.push_str(&columns.join(","));
    text.push('\n');
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Dimension(format!(
                "table row has {} entries for {} columns",
                row.len(),
                columns.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|x| fmt_float(*x)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Write nodal scalar fields on a triangle mesh in legacy ASCII VTK.
///
/// Every field must supply one value per mesh node; field names must be
/// single tokens (no whitespace).
pub fn write_vtk<W: Write>(
    out: &mut W,
    mesh: &Mesh,
    stamp: &FileStamp,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    let n = mesh.n_nodes();
    for (name, values) in fields {
        if values.len() != n {
            return Err(Error::Dimension(format!(
                "field {name} has {} values for {n} nodes",
                values.len()
            )));
        }
        if name.contains(char::is_whitespace) || name.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "VTK field name {name:?} must be a single nonempty token"
            )));
        }
    }
    let mut text = String::new();
    text.push_str("# vtk DataFile Version 3.0\n");
    text.push_str(&format!(
        "config_hash={} version={}\n",
        stamp.config_hash, stamp.version
    ));
    text.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    text.push_str(&format!("POINTS {n} double\n"));
    for p in mesh.nodes() {
        text.push_str(&format!(
            "{} {} 0.0\n",
            fmt_float(p[0]),
            fmt_float(p[1])
        ));
    }
    let nt = mesh.triangles().len();
    text.push_str(&format!("CELLS {nt} {}\n", 4 * nt));
    for tri in mesh.triangles() {
        text.push_str(&format!("3 {} {} {}\n", tri[0], tri[1], tri[2]));
    }
    text.push_str(&format!("CELL_TYPES {nt}\n"));
    for _ in 0..nt {
        text.push_str("5\n");
    }
    text.push_str(&format!("POINT_DATA {n}\n"));
    for (name, values) in fields {
        text.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for v in *values {
            text.push_str(&fmt_float(*v));
            text.push('\n');
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}
