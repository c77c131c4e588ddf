use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use fmds_core::fmds::{fmds_fit, smds_fit, FmdsConfig, FmdsFit};
use fmds_core::mds::{smacof, MdsConfig, MdsInit};
use fmds_core::{DistanceMatrix, Error as CoreError, LabelVector};
use serde::Serialize;

use super::unit_interval;
use crate::error::UsageError;
use crate::io::{self, fmt_f64};
use crate::manifest::{sidecar, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Metric MDS (SMACOF); labels are not used
    Mds,
    /// F-informed MDS
    Fmds,
    /// Supervised MDS
    Smds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Classical,
    Random,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Distance CSV
    #[arg(long)]
    pub distance: PathBuf,
    /// Labels CSV (`sample_id,label`)
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Weight of the confirmatory term for fmds
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    pub lambda: f64,
    /// Weight of the label term for smds
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Permutations used to build the mapping function
    #[arg(long, default_value_t = 999, value_parser = clap::value_parser!(u64).range(1..))]
    pub map_permutations: u64,
    /// Permutations used for p-values
    #[arg(long, default_value_t = 999, value_parser = clap::value_parser!(u64).range(1..))]
    pub pvalue_permutations: u64,
    /// Stop once |p_z - p_x| falls below this
    #[arg(long, default_value_t = 0.01)]
    pub p_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Iteration cap of the SMACOF and superMDS solvers
    #[arg(long, default_value_t = 300)]
    pub mds_max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub mds_tol: f64,
    #[arg(long, value_enum, default_value_t = Init::Classical)]
    pub init: Init,
    /// Rebuild the mapping function before every point update
    #[arg(long)]
    pub remap_every_point: bool,
    /// Hold the sign term fixed for a whole sweep
    #[arg(long)]
    pub delta_per_sweep: bool,
    /// Embedding CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Trace CSV; defaults to <out> with extension `.trace.csv`
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn require_labels(args: &Args, d: &DistanceMatrix) -> Result<LabelVector> {
    let Some(path) = &args.labels else {
        return Err(UsageError(format!("--method {:?} needs --labels", args.method).to_lowercase()).into());
    };
    Ok(io::read_labels(path)?.aligned_to(d.ids())?)
}

fn write_fmds_trace(path: &Path, fit: &FmdsFit) -> Result<()> {
    let header =
        ["iteration", "raw_stress", "confirmatory", "confirmatory_ratio", "objective", "p_z", "f_z", "delta", "fz_fx"];
    let rows = fit.trace.records.iter().map(|r| {
        vec![
            r.iteration.to_string(),
            fmt_f64(r.raw_stress),
            fmt_f64(r.confirmatory),
            fmt_f64(r.confirmatory_ratio),
            fmt_f64(r.objective),
            fmt_f64(r.p_z),
            fmt_f64(r.f_z),
            fmt_f64(r.delta),
            fmt_f64(r.fz_fx),
        ]
    });
    io::write_csv(path, &header, rows)
}

pub fn run(args: Args) -> Result<()> {
    let mut log = Run::new("embed", &args);
    log.seed("seed", args.seed);
    let d = io::read_distance(&args.distance)?;
    log.input(&args.distance)?;
    let trace_path = args.trace.clone().unwrap_or_else(|| args.out.with_extension("trace.csv"));
    let mds = MdsConfig {
        max_iter: args.mds_max_iter,
        stress_tol: args.mds_tol,
        init: match args.init {
            Init::Classical => MdsInit::Classical,
            Init::Random => MdsInit::Random(args.seed),
        },
    };

    let mut failure = None;
    match args.method {
        Method::Mds => {
            if args.labels.is_some() {
                log.warn("metric MDS does not use labels; --labels ignored");
            }
            let fit = smacof(&d, &mds)?;
            io::write_embedding(&args.out, &fit.embedding, None)?;
            let rows = fit.stress_history.iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt_f64(*s)]);
            io::write_csv(&trace_path, &["iteration", "raw_stress"], rows)?;
            log.result("iterations", fit.iterations);
            log.result("raw_stress", fit.stress());
        }
        Method::Smds => {
            let labels = require_labels(&args, &d)?;
            log.input(args.labels.as_deref().unwrap_or(Path::new("")))?;
            let fit = smds_fit(&d, &labels, args.alpha, &mds)?;
            io::write_embedding(&args.out, &fit.embedding, Some(&labels))?;
            let rows = fit.objective_history.iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt_f64(*s)]);
            io::write_csv(&trace_path, &["iteration", "objective"], rows)?;
            log.result("iterations", fit.iterations);
        }
        Method::Fmds => {
            let labels = require_labels(&args, &d)?;
            log.input(args.labels.as_deref().unwrap_or(Path::new("")))?;
            let cfg = FmdsConfig {
                lambda: args.lambda,
                map_permutations: args.map_permutations as usize,
                pvalue_permutations: args.pvalue_permutations as usize,
                p_tol: args.p_tol,
                max_outer_iter: args.max_iter,
                seed: args.seed,
                remap_every_point: args.remap_every_point,
                delta_per_point: !args.delta_per_sweep,
                mds,
            };
            let fit = match fmds_fit(&d, &labels, &cfg) {
                Ok(fit) => fit,
                Err(CoreError::MaxIterationsExceeded(fit)) => {
                    let fit = *fit;
                    failure = Some(CoreError::MaxIterationsExceeded(Box::new(fit.clone())));
                    fit
                }
                Err(e) => return Err(e.into()),
            };
            io::write_embedding(&args.out, &fit.embedding, Some(&labels))?;
            write_fmds_trace(&trace_path, &fit)?;
            log.result("p_x", fit.p_x);
            log.result("f_x", fit.f_x);
            log.result("initial_p_z", fit.trace.initial_p_z);
            log.result("p_z", fit.p_z);
            log.result("iterations", fit.iterations);
            log.result("converged", fit.converged);
        }
    }
    log.output(&args.out)?;
    log.output(&trace_path)?;
    log.finish(&sidecar(&args.out))?;
    match failure {
        Some(e) => Err(anyhow::Error::new(e).context("outputs were written from the last iterate")),
        None => Ok(()),
    }
}
