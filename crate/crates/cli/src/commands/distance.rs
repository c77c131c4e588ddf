use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use fmds_core::dist::{distance, Metric};
use serde::Serialize;

use crate::io;
use crate::manifest::{sidecar, Run};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricArg {
    Euclidean,
    Braycurtis,
    /// Weighted UniFrac; needs --tree
    Wunifrac,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Abundance CSV (`sample_id,<feature>,...`)
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Newick tree whose leaves name the features
    #[arg(long, required_if_eq("metric", "wunifrac"))]
    pub tree: Option<PathBuf>,
    /// Report raw instead of normalized weighted UniFrac
    #[arg(long)]
    pub unnormalized: bool,
    /// Replace every branch length of the tree by 1
    #[arg(long)]
    pub unit_branch_lengths: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let mut log = Run::new("distance", &args);
    let table = io::read_abundance(&args.table)?;
    log.input(&args.table)?;
    let tree = match &args.tree {
        Some(p) if matches!(args.metric, MetricArg::Wunifrac) => {
            let t = io::read_tree(p)?;
            log.input(p)?;
            Some(if args.unit_branch_lengths { t.with_unit_branch_lengths() } else { t })
        }
        Some(_) => {
            log.warn("--tree is only used by wunifrac; ignored");
            None
        }
        None => None,
    };
    let metric = match args.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Braycurtis => Metric::BrayCurtis,
        MetricArg::Wunifrac => Metric::WeightedUnifrac { normalized: !args.unnormalized },
    };
    let d = distance(&table, metric, tree.as_ref())
        .with_context(|| format!("computing distances from {}", args.table.display()))?;
    io::write_distance(&args.out, &d)?;
    log.output(&args.out)?;
    log.finish(&sidecar(&args.out))?;
    Ok(())
}
