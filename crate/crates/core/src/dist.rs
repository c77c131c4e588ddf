//! Pairwise dissimilarities between the rows of an abundance table.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phylo::{accumulate, PhyloTree};
use crate::types::{AbundanceTable, DistanceMatrix};

/// Metrics available to [`distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    BrayCurtis,
    WeightedUnifrac { normalized: bool },
}

pub fn euclidean(table: &AbundanceTable) -> DistanceMatrix {
    DistanceMatrix::from_pairs(table.sample_ids().to_vec(), |i, j| {
        Ok(table.row(i).iter().zip(table.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    })
    .expect("euclidean distances of a validated table are valid")
}

/// Σ|x_i − x_j| / Σ(x_i + x_j). Two all-zero samples are an error.
pub fn bray_curtis(table: &AbundanceTable) -> Result<DistanceMatrix> {
    table.check_nonnegative()?;
    DistanceMatrix::from_pairs(table.sample_ids().to_vec(), |i, j| {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in table.row(i).iter().zip(table.row(j)) {
            num += (a - b).abs();
            den += a + b;
        }
        if den <= 0.0 {
            return Err(Error::ZeroDenominatorPair { i, j });
        }
        Ok(num / den)
    })
}

/// Weighted UniFrac: Σ_b l_b |p_i(b) − p_j(b)|, optionally divided by
/// Σ_b l_b (p_i(b) + p_j(b)), where p(b) is the share of a sample's abundance
/// below branch b.
pub fn weighted_unifrac(table: &AbundanceTable, tree: &PhyloTree, normalized: bool) -> Result<DistanceMatrix> {
    table.check_nonnegative()?;
    let leaves: Vec<usize> = table
        .feature_ids()
        .iter()
        .map(|f| tree.leaf(f).ok_or_else(|| Error::UnknownLeaf(f.clone())))
        .collect::<Result<_>>()?;
    let n_nodes = tree.nodes().len();
    let lengths: Vec<f64> = (0..n_nodes).map(|i| tree.edge_length(i)).collect();

    let mut masses = Vec::with_capacity(table.n_samples());
    for (row, values) in table.rows().iter().enumerate() {
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight { row: Some(row) });
        }
        let mut m = vec![0.0; n_nodes];
        for (&leaf, &v) in leaves.iter().zip(values) {
            m[leaf] += v / total;
        }
        accumulate(tree, &mut m);
        masses.push(m);
    }

    DistanceMatrix::from_pairs(table.sample_ids().to_vec(), |i, j| {
        let (mut num, mut den) = (0.0, 0.0);
        for ((l, a), b) in lengths.iter().zip(&masses[i]).zip(&masses[j]) {
            num += l * (a - b).abs();
            den += l * (a + b);
        }
        if !normalized {
            return Ok(num);
        }
        // den == 0 only when all mass sits on zero-length edges; identical in effect.
        Ok(if den > 0.0 { num / den } else { 0.0 })
    })
}

pub fn distance(table: &AbundanceTable, metric: Metric, tree: Option<&PhyloTree>) -> Result<DistanceMatrix> {
    match metric {
        Metric::Euclidean => Ok(euclidean(table)),
        Metric::BrayCurtis => bray_curtis(table),
        Metric::WeightedUnifrac { normalized } => {
            let tree = tree.ok_or_else(|| Error::InvalidParameter("weighted UniFrac needs a tree".into()))?;
            weighted_unifrac(table, tree, normalized)
        }
    }
}

/// Leaf weights of one table row, for use with [`crate::phylo::branch_descendant_mass`].
pub fn row_weights(table: &AbundanceTable, row: usize) -> HashMap<String, f64> {
    table.feature_ids().iter().cloned().zip(table.row(row).iter().copied()).collect()
}
