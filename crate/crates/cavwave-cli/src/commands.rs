//! Experiment drivers behind the CLI subcommands.
//!
//! Every driver loads a configuration, runs the solver library, and writes
//! deterministic CSV (and optionally VTK) artifacts stamped with the
//! configuration digest. Wall-clock columns are written as 0 unless timings
//! are explicitly requested, so repeated runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cavwave_core::cascade::{CascadeSession, Formulation, HarmonicStack};
use cavwave_core::mesh::{prolongate, refine_uniform_with_map, Mesh};
use cavwave_core::postprocess::{
    diagnostics, harmonic_norms, l2_norm_complex, linf_l2, reconstruct_time,
    relative_difference, write_diagnostics_csv, write_table_csv, write_vtk, DiagnosticsRow,
    FileStamp,
};
use cavwave_core::{Error, Result};
use num_complex::Complex64;

use crate::config::LoadedConfig;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shared run-time switches coming from flags and the environment.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record real wall-clock times instead of deterministic zeros.
    pub timings: bool,
    /// Overrides the configured output directory when set.
    pub output_dir: Option<PathBuf>,
}

fn stamp(loaded: &LoadedConfig, extra: Vec<(String, String)>) -> FileStamp {
    let mut stamp = FileStamp::new(loaded.hash.clone(), VERSION);
    stamp
        .extra
        .push(("seed".to_string(), loaded.experiment.seed.to_string()));
    stamp.extra.extend(extra);
    stamp
}

fn output_dir(loaded: &LoadedConfig, opts: &RunOptions) -> Result<PathBuf> {
    let dir = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| loaded.experiment.output.directory.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_file(path: &Path, emit: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    emit(&mut buf)?;
    fs::write(path, buf)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// `run`: one solve, diagnostics CSV, optional VTK fields.
pub fn cmd_run(loaded: &LoadedConfig, opts: &RunOptions) -> Result<()> {
    let cfg = &loaded.experiment;
    let mesh = cfg.build_mesh()?;
    let params = cfg.simulation_params(&mesh)?;
    let omega = params.omega;
    let bubble_free = params.n0.is_zero();
    let formulation = cfg.formulation()?;
    let mut session = CascadeSession::new(&mesh, params, cfg.source())?;

    let started = Instant::now();
    let stack = session.run_with_polish(
        formulation,
        cfg.run.n_max,
        cfg.run.amplitude,
        cfg.run.polish,
    )?;
    let wall = if opts.timings {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let mass = &session.forms().mass;
    let diag = diagnostics(&stack.pressure, mass, omega, cfg.run.n_samples)?;
    let row = DiagnosticsRow::from_diagnostics(
        format!("cfg-{}", &loaded.hash[..12]),
        formulation.label(),
        cfg.run.n_max,
        cfg.run.amplitude,
        cfg.h_label(&mesh),
        &diag,
        wall,
    );
    println!(
        "qoi = {:.6e}; ratios r_2..r_6 = {:?}; levels run = {}",
        diag.qoi, row.ratios, stack.levels_run
    );

    let dir = output_dir(loaded, opts)?;
    let file_stamp = stamp(
        loaded,
        vec![("bubble_free".to_string(), bubble_free.to_string())],
    );
    if cfg.output.csv {
        write_file(&dir.join("diagnostics.csv"), |buf| {
            write_diagnostics_csv(buf, &file_stamp, &[row.clone()])
        })?;
    }
    if cfg.output.vtk {
        write_run_vtk(&dir.join("fields.vtk"), &mesh, &file_stamp, &stack, omega)?;
    }
    Ok(())
}

fn write_run_vtk(
    path: &Path,
    mesh: &Mesh,
    file_stamp: &FileStamp,
    stack: &HarmonicStack,
    omega: f64,
) -> Result<()> {
    let re_p = reconstruct_time(&stack.pressure, omega, 0.0)?;
    let moduli: Vec<Vec<f64>> = stack
        .pressure
        .iter()
        .skip(1)
        .map(|p| p.iter().map(|c| c.norm()).collect())
        .collect();
    let mut fields: Vec<(String, &[f64])> = vec![("re_p".to_string(), re_p.as_slice())];
    for (i, field) in moduli.iter().enumerate() {
        fields.push((format!("abs_p_{}", i + 1), field.as_slice()));
    }
    let borrowed: Vec<(&str, &[f64])> = fields.iter().map(|(n, f)| (n.as_str(), *f)).collect();
    write_file(path, |buf| write_vtk(buf, mesh, file_stamp, &borrowed))
}

/// `mesh-convergence`: solve on a nested refinement hierarchy and report
/// field errors against the finest level.
pub fn cmd_mesh_convergence(
    loaded: &LoadedConfig,
    h_list: &[f64],
    opts: &RunOptions,
) -> Result<()> {
    let cfg = &loaded.experiment;
    if h_list.is_empty() {
        return Err(Error::Config("mesh-convergence: empty h list".into()));
    }
    let mut sorted = h_list.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let h0 = sorted[0];
    for (k, &h) in sorted.iter().enumerate() {
        let expected = h0 / (1u64 << k) as f64;
        if ((h - expected) / expected).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "mesh-convergence: h values must halve successively so the meshes nest; \
                 got {h} where {expected} was expected"
            )));
        }
    }
    if cfg.mesh.path.is_some() {
        return Err(Error::Config(
            "mesh-convergence: needs generated meshes (radius + h), not a mesh file".into(),
        ));
    }

    let radius = cfg.mesh.radius.unwrap_or(0.2);
    let formulation = cfg.formulation()?;

    // Build the nested hierarchy: generate at the coarsest target, refine.
    let mut meshes: Vec<Mesh> = vec![cavwave_core::mesh::generate_disk(radius, h0)?];
    let mut maps: Vec<Vec<(usize, usize)>> = Vec::new();
    for _ in 1..sorted.len() {
        let (fine, map) = refine_uniform_with_map(meshes.last().unwrap(), Some(radius))?;
        meshes.push(fine);
        maps.push(map);
    }

    // Solve every level and carry each pressure stack to the finest mesh.
    let mut stacks_on_finest: Vec<Vec<Vec<Complex64>>> = Vec::new();
    let mut qois = Vec::new();
    let finest = meshes.len() - 1;
    for (level, mesh) in meshes.iter().enumerate() {
        let params = cfg.simulation_params(mesh)?;
        let omega = params.omega;
        let mut session = CascadeSession::new(mesh, params, cfg.source())?;
        let stack =
            session.run_with_polish(formulation, cfg.run.n_max, cfg.run.amplitude, cfg.run.polish)?;
        qois.push(linf_l2(
            &stack.pressure,
            &session.forms().mass,
            omega,
            cfg.run.n_samples,
        )?);
        let mut carried = stack.pressure.clone();
        for map in &maps[level..] {
            carried = carried
                .iter()
                .map(|h| prolongate(h, map))
                .collect::<Result<_>>()?;
        }
        stacks_on_finest.push(carried);
        println!(
            "level {level}: h = {:.6e}, {} nodes, qoi = {:.6e}",
            sorted[level],
            mesh.n_nodes(),
            qois[level]
        );
    }

    // Relative L-infinity-L2 error of each level against the reference.
    let reference = &stacks_on_finest[finest];
    let params = cfg.simulation_params(&meshes[finest])?;
    let omega = params.omega;
    let fine_forms = cavwave_core::fem::assemble_forms(
        &meshes[finest],
        &vec![1.0; meshes[finest].n_nodes()],
    )?;
    let ref_qoi = linf_l2(reference, &fine_forms.mass, omega, cfg.run.n_samples)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (level, carried) in stacks_on_finest.iter().enumerate() {
        let diff: Vec<Vec<Complex64>> = carried
            .iter()
            .zip(reference)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let err = if level == finest {
            0.0
        } else {
            linf_l2(&diff, &fine_forms.mass, omega, cfg.run.n_samples)? / ref_qoi
        };
        errors.push(err);
        let slope = if level == 0 || err == 0.0 || errors[level - 1] == 0.0 {
            0.0
        } else {
            // h halves between levels, so the log-log slope is a log2 ratio.
            (errors[level - 1] / err).log2()
        };
        rows.push(vec![
            sorted[level],
            meshes[level].n_nodes() as f64,
            qois[level],
            err,
            slope,
        ]);
    }

    let dir = output_dir(loaded, opts)?;
    let lists = vec![(
        "h_list".to_string(),
        sorted
            .iter()
            .map(|h| format!("{h:e}"))
            .collect::<Vec<_>>()
            .join(","),
    )];
    write_file(&dir.join("mesh_convergence.csv"), |buf| {
        write_table_csv(
            buf,
            &stamp(loaded, lists),
            &["h", "n_nodes", "qoi", "rel_error", "slope"],
            &rows,
        )
    })
}

/// `n-convergence`: sweep the harmonic cut-off and compare the functional
/// against the largest requested cut-off.
pub fn cmd_n_convergence(loaded: &LoadedConfig, n_list: &[u32], opts: &RunOptions) -> Result<()> {
    let cfg = &loaded.experiment;
    if n_list.is_empty() {
        return Err(Error::Config("n-convergence: empty N list".into()));
    }
    let mut sorted = n_list.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n_ref = *sorted.last().unwrap();

    let mesh = cfg.build_mesh()?;
    let params = cfg.simulation_params(&mesh)?;
    let omega = params.omega;
    let formulation = cfg.formulation()?;
    let mut session = CascadeSession::new(&mesh, params, cfg.source())?;
    // One factorization pass serves every cut-off in the sweep.
    session.prepare(n_ref)?;

    let samples = cfg.run.n_samples.max(4 * n_ref as usize + 1);
    let mut qoi_of = Vec::new();
    for &n in &sorted {
        let stack = session.run_with_polish(formulation, n, cfg.run.amplitude, cfg.run.polish)?;
        let qoi = linf_l2(&stack.pressure, &session.forms().mass, omega, samples)?;
        qoi_of.push(qoi);
        println!("N = {n}: qoi = {qoi:.15e}");
    }
    let reference = *qoi_of.last().unwrap();
    let rows: Vec<Vec<f64>> = sorted
        .iter()
        .zip(&qoi_of)
        .map(|(&n, &q)| {
            let err = if n == n_ref {
                0.0
            } else {
                relative_difference(q, reference).unwrap_or(f64::INFINITY)
            };
            vec![n as f64, q, err]
        })
        .collect();

    let dir = output_dir(loaded, opts)?;
    let lists = vec![(
        "n_list".to_string(),
        sorted
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(","),
    )];
    write_file(&dir.join("n_convergence.csv"), |buf| {
        write_table_csv(
            buf,
            &stamp(loaded, lists),
            &["n", "qoi", "rel_error"],
            &rows,
        )
    })
}

/// `compare-formulations`: per-harmonic norm differences between the real
/// and the linearized complex scheme at identical settings.
pub fn cmd_compare_formulations(loaded: &LoadedConfig, opts: &RunOptions) -> Result<()> {
    let cfg = &loaded.experiment;
    let mesh = cfg.build_mesh()?;
    let params = cfg.simulation_params(&mesh)?;
    let mut session = CascadeSession::new(&mesh, params, cfg.source())?;

    let real = session.run_with_polish(
        Formulation::RealFull,
        cfg.run.n_max,
        cfg.run.amplitude,
        cfg.run.polish,
    )?;
    let complex = session.run_with_polish(
        Formulation::ComplexLinearized,
        cfg.run.n_max,
        cfg.run.amplitude,
        cfg.run.polish,
    )?;

    let mass = &session.forms().mass;
    let norms_real = harmonic_norms(&real.pressure, mass)?;
    let norms_complex = harmonic_norms(&complex.pressure, mass)?;
    let mut rows = Vec::new();
    for m in 1..=cfg.run.n_max as usize {
        let (a, b) = (norms_real[m], norms_complex[m]);
        let rel = if b > 0.0 {
            (a - b).abs() / b
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        println!("m = {m}: |real| = {a:.6e}, |complex| = {b:.6e}, rel diff = {rel:.3e}");
        rows.push(vec![m as f64, a, b, rel]);
    }

    let dir = output_dir(loaded, opts)?;
    write_file(&dir.join("compare_formulations.csv"), |buf| {
        write_table_csv(
            buf,
            &stamp(loaded, Vec::new()),
            &["m", "norm_real", "norm_complex", "rel_diff"],
            &rows,
        )
    })
}

/// `two-harmonic`: the closed two-harmonic scheme against the general
/// cascade truncated at two harmonics.
pub fn cmd_two_harmonic(loaded: &LoadedConfig, opts: &RunOptions) -> Result<()> {
    let cfg = &loaded.experiment;
    let mesh = cfg.build_mesh()?;
    let params = cfg.simulation_params(&mesh)?;
    let mut session = CascadeSession::new(&mesh, params, cfg.source())?;

    let two = session.run(Formulation::TwoHarmonic, 2, cfg.run.amplitude)?;
    let direct = session.run(Formulation::ComplexDirect, 2, cfg.run.amplitude)?;

    let mass = &session.forms().mass;
    let mut rows = Vec::new();
    for m in 1..=2usize {
        let a = l2_norm_complex(mass, &two.pressure[m])?;
        let b = l2_norm_complex(mass, &direct.pressure[m])?;
        let diff: Vec<Complex64> = two.pressure[m]
            .iter()
            .zip(&direct.pressure[m])
            .map(|(x, y)| x - y)
            .collect();
        let rel = if b > 0.0 {
            l2_norm_complex(mass, &diff)? / b
        } else {
            0.0
        };
        println!("m = {m}: |two| = {a:.6e}, |direct| = {b:.6e}, field rel diff = {rel:.3e}");
        rows.push(vec![m as f64, a, b, rel]);
    }

    let dir = output_dir(loaded, opts)?;
    write_file(&dir.join("two_harmonic.csv"), |buf| {
        write_table_csv(
            buf,
            &stamp(loaded, Vec::new()),
            &["m", "norm_two_harmonic", "norm_direct", "rel_diff"],
            &rows,
        )
    })
}

/// `mesh gen`: write a disk mesh to a file (.msh or plain text by
/// extension).
pub fn cmd_mesh_gen(radius: f64, h: f64, out: &Path) -> Result<()> {
    let mesh = cavwave_core::mesh::generate_disk(radius, h)?;
    match out.extension().and_then(|e| e.to_str()) {
        Some("msh") => cavwave_core::mesh::write_msh(out, &mesh)?,
        _ => cavwave_core::mesh::write_mesh_text(out, &mesh)?,
    }
    let stats = mesh.statistics();
    println!(
        "wrote {} ({} nodes, {} triangles, h_max = {:.6e})",
        out.display(),
        stats.n_nodes,
        stats.n_triangles,
        stats.h_max
    );
    Ok(())
}

/// `mesh info`: print statistics of a stored mesh.
pub fn cmd_mesh_info(path: &Path) -> Result<()> {
    let mesh = match path.extension().and_then(|e| e.to_str()) {
        Some("msh") => cavwave_core::mesh::read_msh(path)?,
        _ => cavwave_core::mesh::read_mesh_text(path)?,
    };
    let stats = mesh.statistics();
    println!("nodes:          {}", stats.n_nodes);
    println!("triangles:      {}", stats.n_triangles);
    println!("boundary edges: {}", stats.n_boundary_edges);
    println!("h_max:          {:.6e}", stats.h_max);
    println!("h_min:          {:.6e}", stats.h_min);
    println!("min area:       {:.6e}", stats.min_area);
    println!("total area:     {:.6e}", stats.total_area);
    Ok(())
}
