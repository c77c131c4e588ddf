use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use fmds_core::simulate::{simulate, SimKind, SimSpec};
use serde::Serialize;

use crate::io;
use crate::manifest::Run;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Two groups of compositional 4-feature samples
    Binary,
    /// Three groups of signed 2-feature samples
    Ternary,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replicate index; each index draws an independent dataset
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long, default_value_t = 50)]
    pub n_per_group: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let mut spec = SimSpec::new(
        match args.kind {
            Kind::Binary => SimKind::BinaryCompositional,
            Kind::Ternary => SimKind::Ternary,
        },
        args.seed,
        args.replicate,
    );
    spec.n_per_group = args.n_per_group;
    let mut log = Run::new("simulate", &args);
    log.seed("seed", args.seed);
    log.seed("replicate", args.replicate);

    let (table, labels) = simulate(&spec)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let abundance = args.out.join("abundance.csv");
    let labels_path = args.out.join("labels.csv");
    io::write_abundance(&abundance, &table)?;
    io::write_labels(&labels_path, &labels)?;
    log.output(&abundance)?;
    log.output(&labels_path)?;
    log.finish(&args.out.join("manifest.json"))?;
    Ok(())
}
