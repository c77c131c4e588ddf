pub mod distance;
pub mod embed;
pub mod evaluate;
pub mod permanova;
pub mod plot;
pub mod simulate;

use std::path::Path;

use anyhow::Result;
use fmds_core::{Embedding, LabelVector};

use crate::error::UsageError;
use crate::io;

/// Labels from a labels file, else from the embedding's own label column.
pub fn labels_for(embedding_labels: Option<LabelVector>, labels_path: Option<&Path>, order: &[String]) -> Result<LabelVector> {
    let labels = match (labels_path, embedding_labels) {
        (Some(p), _) => io::read_labels(p)?,
        (None, Some(l)) => l,
        (None, None) => {
            return Err(UsageError("no labels: pass --labels or use an embedding with a label column".into()).into())
        }
    };
    Ok(labels.aligned_to(order)?)
}

pub fn read_embedding_aligned(path: &Path, order: &[String]) -> Result<(Embedding, Option<LabelVector>)> {
    let (z, labels) = io::read_embedding(path)?;
    let z = z.aligned_to(order)?;
    let labels = labels.map(|l| l.aligned_to(order)).transpose()?;
    Ok((z, labels))
}

/// Accepts numbers in [0, 1] for the trade-off weights.
pub fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is out of range; the value must range from [0,1]"))
    }
}
