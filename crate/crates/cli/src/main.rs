//! `fmds` command-line pipeline: simulate, distance, embed, permanova,
//! evaluate and plot.

mod commands;
mod error;
mod io;
mod manifest;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{distance, embed, evaluate, permanova, plot, simulate};
use error::{exit_code, UsageError};

#[derive(Parser)]
#[command(name = "fmds", version, about = "F-informed multidimensional scaling pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded synthetic dataset
    Simulate(simulate::Args),
    /// Pairwise distances between samples of an abundance table
    Distance(distance::Args),
    /// 2D embedding by metric MDS, F-informed MDS or superMDS
    Embed(embed::Args),
    /// PERMANOVA on a distance matrix or an embedding
    Permanova(permanova::Args),
    /// Quality metrics of an embedding against its distance matrix
    Evaluate(evaluate::Args),
    /// SVG scatter plot with confidence ellipses
    Plot(plot::Args),
}

/// Worker cap from `FMDS_THREADS`, if set.
pub fn configured_threads() -> Option<usize> {
    std::env::var("FMDS_THREADS").ok().and_then(|v| v.trim().parse().ok())
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("FMDS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("FMDS_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Distance(a) => distance::run(a),
        Command::Embed(a) => embed::run(a),
        Command::Permanova(a) => permanova::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Plot(a) => plot::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}
