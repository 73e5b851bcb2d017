use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use dimsynth::cli::{self, Format, SynthesizeArgs};
use dimsynth::jacobian::TaskSpace;
use dimsynth::optimizer::SynthesisOptions;

#[derive(Parser)]
#[command(
    name = "dimsynth",
    version,
    about = "Jacobians, manipulability and dimensional synthesis of manipulator topologies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the reduced Jacobian, det(A2) and the type-2 matrices at a configuration.
    Jacobian {
        topology: PathBuf,
        config: PathBuf,
        /// Keep only the (vx, vy, wz) twist rows.
        #[arg(long)]
        planar: bool,
    },
    /// Metrics and link lengths of a design vector, synthesis result or configuration.
    Evaluate {
        topology: PathBuf,
        design: PathBuf,
        /// Entry name when DESIGN is a synthesis output with several rows.
        #[arg(long)]
        entry: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: EvalFormat,
    },
    /// Synthesize every topology of a catalog and write the ranked prescription.
    Synthesize {
        catalog: PathBuf,
        #[arg(long, value_parser = parse_point, default_value = "3,4,5")]
        task_point: Vector3<f64>,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        /// RNG seed; drawn from system entropy when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {} values", parts.len())),
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = match args.command {
        Command::Jacobian {
            topology,
            config,
            planar,
        } => {
            let task = if planar {
                TaskSpace::Planar
            } else {
                TaskSpace::Spatial
            };
            cli::cmd_jacobian(&topology, &config, task, &mut out, &mut err)
        }
        Command::Evaluate {
            topology,
            design,
            entry,
            format,
        } => {
            let format = match format {
                EvalFormat::Text => Format::Text,
                EvalFormat::Json => Format::Json,
            };
            cli::cmd_evaluate(
                &topology,
                &design,
                entry.as_deref(),
                format,
                &mut out,
                &mut err,
            )
        }
        Command::Synthesize {
            catalog,
            task_point,
            restarts,
            seed,
            format,
            out: out_path,
        } => {
            let options = SynthesisOptions {
                n_restarts: restarts,
                rng_seed: seed.unwrap_or_else(rand::random),
                ..SynthesisOptions::default()
            };
            let format = match format {
                OutFormat::Csv => Format::Csv,
                OutFormat::Json => Format::Json,
            };
            let args = SynthesizeArgs {
                catalog: &catalog,
                task_point,
                options,
                format,
                out: out_path.as_deref(),
            };
            cli::cmd_synthesize(&args, &mut out, &mut err)
        }
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::EXIT_INPUT as u8)
        }
    }
}
