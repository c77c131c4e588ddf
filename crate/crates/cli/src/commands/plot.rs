use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;

use super::labels_for;
use crate::io;
use crate::manifest::{sidecar, Run};
use crate::svg;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    pub embedding: PathBuf,
    /// Labels CSV; optional when the embedding has a label column
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Confidence level of the ellipses
    #[arg(long, default_value_t = 0.68)]
    pub level: f64,
    /// SVG output
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let mut log = Run::new("plot", &args);
    let (z, own) = io::read_embedding(&args.embedding)?;
    let labels = labels_for(own, args.labels.as_deref(), z.ids())?;
    log.input(&args.embedding)?;
    if let Some(p) = &args.labels {
        log.input(p)?;
    }
    let plot = svg::render(&z, &labels, args.level)?;
    for w in plot.warnings {
        log.warn(w);
    }
    std::fs::write(&args.out, plot.svg)?;
    log.output(&args.out)?;
    log.finish(&sidecar(&args.out))?;
    Ok(())
}
