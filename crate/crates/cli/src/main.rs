use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fqpt_cli::{compare, init_threads, preset, reconstruct, simulate_file, CliError, Method, PRESETS};

#[derive(Parser)]
#[command(name = "fqpt", version, about = "Simulate and reconstruct space-dependent SU(2) polarization processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and measurement maps from a manifest.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the process from a simulated dataset.
    Reconstruct {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two reconstructions, optionally against a dataset's truth.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a shipped manifest as TOML.
    Preset {
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate { manifest, out } => {
            let s = simulate_file(&manifest, &out)?;
            println!(
                "simulated {} ({}): {} maps in {}",
                s.manifest.name,
                s.manifest.protocol.label(),
                s.maps.len(),
                out.display()
            );
        }
        Command::Reconstruct { dataset, method, out } => {
            let s = reconstruct(&dataset, method, &out)?;
            println!(
                "{} reconstruction from {} maps in {:.3} s -> {}",
                s.info.method,
                s.info.maps_consumed.len(),
                s.timing.wall_clock_s,
                out.display()
            );
        }
        Command::Compare { a, b, truth, out } => {
            let r = compare(&a, &b, truth.as_deref(), &out)?;
            for (pair, f) in &r.fidelity {
                println!("F({pair}) = {:.6}", f.mean);
            }
            for (name, s) in &r.spectra {
                println!("{name}: s = {:.6}, delta = {:.3e}", s.similarity, s.abs_distance);
            }
        }
        Command::Preset { name, out } => {
            let m = preset(&name).ok_or_else(|| {
                CliError::InvalidManifest(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))
            })?;
            match out {
                Some(path) => std::fs::write(&path, m.to_toml()).map_err(|source| CliError::Io { path, source })?,
                None => print!("{}", m.to_toml()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
