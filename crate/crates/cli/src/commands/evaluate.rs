use std::path::PathBuf;

use anyhow::Result;
use fmds_core::metrics::{evaluate, shepard, QualityConfig};
use serde::Serialize;

use super::{labels_for, read_embedding_aligned};
use crate::io::{self, fmt_f64};
use crate::manifest::{sidecar, Run};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Distance CSV of the original space
    #[arg(long)]
    pub distance: PathBuf,
    /// Embedding CSV from any method
    #[arg(long)]
    pub embedding: PathBuf,
    /// Labels CSV; optional when the embedding has a label column
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Local neighbourhood size; defaults to 7% of N
    #[arg(long)]
    pub k_local: Option<usize>,
    /// Global neighbourhood size; defaults to 75% of N, capped below N/2
    #[arg(long)]
    pub k_global: Option<usize>,
    /// Paired permutations for the F metrics
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(3..))]
    pub permutations: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allow k ≥ N/2
    #[arg(long)]
    pub force_k: bool,
    /// Also report Kruskal's square-rooted Stress-1
    #[arg(long)]
    pub kruskal_root: bool,
    /// JSON report
    #[arg(long)]
    pub out: PathBuf,
    /// Shepard CSV; defaults to <out> with extension `.shepard.csv`
    #[arg(long)]
    pub shepard: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let mut log = Run::new("evaluate", &args);
    log.seed("seed", args.seed);
    let d = io::read_distance(&args.distance)?;
    let (z, own) = read_embedding_aligned(&args.embedding, d.ids())?;
    let labels = labels_for(own, args.labels.as_deref(), d.ids())?;
    log.input(&args.distance)?;
    log.input(&args.embedding)?;
    if let Some(p) = &args.labels {
        log.input(p)?;
    }
    let cfg = QualityConfig {
        k_local: args.k_local,
        k_global: args.k_global,
        permutations: args.permutations as usize,
        seed: args.seed,
        force_k: args.force_k,
        kruskal_root: args.kruskal_root,
    };
    let report = evaluate(&d, &z, &labels, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&args.out, text)?;

    let shepard_path = args.shepard.clone().unwrap_or_else(|| args.out.with_extension("shepard.csv"));
    let sh = shepard(&d, &z)?;
    let n = d.len();
    let ids = d.ids();
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    let rows = pairs
        .zip(&sh.pairs)
        .map(|((i, j), (o, e))| vec![ids[i].clone(), ids[j].clone(), fmt_f64(*o), fmt_f64(*e)]);
    io::write_csv(&shepard_path, &["sample_a", "sample_b", "original", "embedded"], rows)?;

    log.output(&args.out)?;
    log.output(&shepard_path)?;
    log.finish(&sidecar(&args.out))?;
    Ok(())
}
