//! `cutquad`: runs cut-cell quadrature experiments from JSON configs or presets.

mod config;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cutquad", version, about = "Cut-cell quadrature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV, JSON and SVG artifacts.
    Run {
        /// Flat JSON config; its keys override those of the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also draw the schemes (2D only).
        #[arg(long)]
        svg: bool,
        #[arg(long, env = "CUTQUAD_THREADS")]
        threads: Option<usize>,
    },
    /// List the available presets.
    Presets,
}

/// A failed run: machine-readable kind, message and exit status.
#[derive(Debug)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub code: u8,
}

impl Failure {
    /// Rejected input: exit status 2.
    pub fn config(kind: &str, message: String) -> Self {
        Failure { kind: kind.into(), message, code: 2 }
    }
}

impl From<cutquad::Error> for Failure {
    fn from(e: cutquad::Error) -> Self {
        let code = match e {
            cutquad::Error::InvalidArgument(_) | cutquad::Error::InvalidGeometry(_) => 2,
            _ => 1,
        };
        Failure { kind: e.kind().into(), message: e.to_string(), code }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { kind: "io".into(), message: e.to_string(), code: 1 }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Presets => {
            for (name, about) in config::PRESETS {
                println!("{name:<10} {about}");
            }
            Ok(())
        }
        Command::Run { config, preset, out, svg, threads } => {
            if config.is_none() && preset.is_none() {
                return Err(Failure::config("invalid_config", "give --config or --preset".into()));
            }
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Failure::config("invalid_config", e.to_string()))?;
            }
            let file = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    Some(serde_json::from_str(&text).map_err(|e| Failure::config("invalid_config", e.to_string()))?)
                }
                None => None,
            };
            let cfg = config::resolve(preset.as_deref(), file)?;
            for f in run::run(&cfg, &out, svg)? {
                println!("{}", out.join(f).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": {"kind": f.kind, "message": f.message}}));
            ExitCode::from(f.code)
        }
    }
}
