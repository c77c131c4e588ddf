use std::path::PathBuf;

use anyhow::Result;
use fmds_core::permanova::{permutation_distribution, SquaredDistances};
use fmds_core::SeededRng;
use serde::Serialize;

use super::labels_for;
use crate::io;
use crate::manifest::{sidecar, Run};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Distance CSV or embedding CSV (`sample_id,x,y[,label]`)
    #[arg(long)]
    pub input: PathBuf,
    /// Labels CSV; optional when the embedding has a label column
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Number of label permutations K
    #[arg(long = "permutations", short = 'k', default_value_t = 999, value_parser = clap::value_parser!(u64).range(1..))]
    pub permutations: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report (1 + count) / (1 + K) instead of count / K
    #[arg(long)]
    pub conservative: bool,
    /// JSON report path; printed to stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    #[serde(rename = "F")]
    pub f: f64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub p_rule: &'static str,
    pub n: usize,
    pub input_kind: &'static str,
}

pub fn run(args: Args) -> Result<()> {
    let mut log = Run::new("permanova", &args);
    log.seed("seed", args.seed);
    let (space, labels, kind) = if io::looks_like_embedding(&args.input)? {
        let (z, own) = io::read_embedding(&args.input)?;
        let labels = labels_for(own, args.labels.as_deref(), z.ids())?;
        (SquaredDistances::from_embedding(&z), labels, "embedding")
    } else {
        let d = io::read_distance(&args.input)?;
        let labels = labels_for(None, args.labels.as_deref(), d.ids())?;
        (SquaredDistances::from_distances(&d), labels, "distance")
    };
    log.input(&args.input)?;
    if let Some(p) = &args.labels {
        log.input(p)?;
    }
    let dist = permutation_distribution(&space, &labels, args.permutations as usize, &SeededRng::new(args.seed))?;
    let report = Report {
        f: dist.observed_f,
        p: if args.conservative { dist.p_value_conservative() } else { dist.p_value() },
        k: dist.k,
        seed: args.seed,
        p_rule: if args.conservative { "conservative" } else { "exceedance" },
        n: labels.len(),
        input_kind: kind,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &args.out {
        Some(out) => {
            std::fs::write(out, text)?;
            log.output(out)?;
            log.finish(&sidecar(out))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

