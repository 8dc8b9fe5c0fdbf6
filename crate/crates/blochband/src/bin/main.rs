//! Command-line front end: flag parsing, thread-pool setup, and exit
//! codes. All real work happens in `blochband::cli`.

use blochband::cli::{self, Command, Overrides};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "blochband",
    version,
    about = "Bloch band structures, spectral gaps, and separation certificates \
             for periodically perforated planar domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Band structure along the configured k-path
    Bands(Common),
    /// Band surface over a rectangular k-grid
    Surface(Common),
    /// Band ranges, their union, and the spectral gaps
    Gaps(Common),
    /// Band structures along a shape deformation family
    Sweep(Common),
    /// Separation-bound certificate for the shifted operator
    Thomas(Common),
    /// Smoothness probe of one eigenvalue branch in the deformation
    Probe(Common),
    /// Built-in consistency checks; exits 0 only if all pass
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment description (defaults apply when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for k and t sweeps
    #[arg(long)]
    threads: Option<usize>,
    /// Grid resolution override
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Band count override
    #[arg(long)]
    bands: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Bands(c) => (Command::Bands, c),
        Cmd::Surface(c) => (Command::Surface, c),
        Cmd::Gaps(c) => (Command::Gaps, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Thomas(c) => (Command::Thomas, c),
        Cmd::Probe(c) => (Command::Probe, c),
        Cmd::Validate(c) => (Command::Validate, c),
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let overrides = Overrides { out: common.out, grid_n: common.grid_n, bands: common.bands };
    match cli::run(cmd, common.config.as_deref(), &overrides, &mut std::io::stdout()) {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
