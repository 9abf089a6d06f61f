//! Experiment runner for the multiharmonic bubbly-liquid acoustics solver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavwave_core::Error;
use commands::RunOptions;
use config::ExperimentConfig;

/// Environment variable overriding the configured output directory.
const OUTPUT_DIR_VAR: &str = "CAVWAVE_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "cavwave",
    version,
    about = "Time-periodic nonlinear acoustics in bubbly liquids, one Helmholtz problem per harmonic"
)]
struct Cli {
    /// Cap the worker thread count (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write diagnostics (CSV, optional VTK).
    Run {
        /// Path to the JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Record wall-clock times (makes output bytes nondeterministic).
        #[arg(long)]
        timings: bool,
    },
    /// Solve on a nested mesh hierarchy; finest level is the reference.
    MeshConvergence {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated target edge lengths, each half the previous.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.025, 0.0125, 0.00625, 0.003125])]
        h_list: Vec<f64>,
    },
    /// Sweep the harmonic cut-off; the largest N is the reference.
    NConvergence {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated cut-off values.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 5, 7, 10])]
        n_list: Vec<u32>,
    },
    /// Real versus linearized-complex scheme at identical settings.
    CompareFormulations {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed two-harmonic scheme versus the cascade truncated at two.
    TwoHarmonic {
        #[arg(long)]
        config: PathBuf,
    },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Generate a disk mesh and write it to a file (.msh or plain text).
    Gen {
        /// Disk radius [m].
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
        /// Target edge length [m].
        #[arg(long)]
        h: f64,
        /// Output path; .msh selects the Gmsh format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print statistics of a stored mesh.
    Info {
        #[arg(long)]
        path: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Diverged(_) => 3,
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::MeshParse { .. }
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {threads} threads: {e}")))?;
    }
    let opts = RunOptions {
        timings: false,
        output_dir: std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from),
    };
    match cli.command {
        Command::Run { config, timings } => {
            let loaded = ExperimentConfig::load(&config)?;
            let opts = RunOptions { timings, ..opts };
            commands::cmd_run(&loaded, &opts)
        }
        Command::MeshConvergence { config, h_list } => {
            let loaded = ExperimentConfig::load(&config)?;
            commands::cmd_mesh_convergence(&loaded, &h_list, &opts)
        }
        Command::NConvergence { config, n_list } => {
            let loaded = ExperimentConfig::load(&config)?;
            commands::cmd_n_convergence(&loaded, &n_list, &opts)
        }
        Command::CompareFormulations { config } => {
            let loaded = ExperimentConfig::load(&config)?;
            commands::cmd_compare_formulations(&loaded, &opts)
        }
        Command::TwoHarmonic { config } => {
            let loaded = ExperimentConfig::load(&config)?;
            commands::cmd_two_harmonic(&loaded, &opts)
        }
        Command::Mesh { command } => match command {
            MeshCommand::Gen { radius, h, out } => commands::cmd_mesh_gen(radius, h, &out),
            MeshCommand::Info { path } => commands::cmd_mesh_info(&path),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
