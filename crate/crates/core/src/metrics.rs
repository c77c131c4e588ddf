//! Embedding quality: neighbourhood ranks, stress, Shepard correlation,
//! permutation-F agreement and per-group cluster geometry.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::permanova::{permuted_labels, SquaredDistances};
use crate::rng::SeededRng;
use crate::types::{DistanceMatrix, Embedding, LabelVector};

/// For each i, the other points ordered by (distance, index).
fn neighbour_order(d: &DistanceMatrix) -> Vec<Vec<usize>> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let row = d.row(i);
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            order
        })
        .collect()
}

/// Σ_i Σ_{j among the k nearest in `b` but not in `a`} (rank of j in `a` − k).
fn rank_penalty(a: &DistanceMatrix, b: &DistanceMatrix, k: usize) -> f64 {
    let n = a.len();
    let order_a = neighbour_order(a);
    let order_b = neighbour_order(b);
    let mut rank = vec![0usize; n];
    let mut total = 0usize;
    for i in 0..n {
        for (r, &j) in order_a[i].iter().enumerate() {
            rank[j] = r + 1;
        }
        for &j in &order_b[i][..k] {
            if rank[j] > k {
                total += rank[j] - k;
            }
        }
    }
    total as f64
}

/// 2/(Nk(2N − 3k − 1)).
fn normalizer(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0))
}

fn check_k(n: usize, k: usize, force: bool) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n, reason: "k must lie in [1, N)".into() });
    }
    if 2 * n == 3 * k + 1 {
        return Err(Error::InvalidK { k, n, reason: "normalizer is undefined at 2N − 3k − 1 = 0".into() });
    }
    if !force && 2 * k >= n {
        return Err(Error::InvalidK { k, n, reason: "k must be below N/2".into() });
    }
    Ok(())
}

fn rank_metric(a: &DistanceMatrix, b: &DistanceMatrix, k: usize, force: bool) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    check_k(a.len(), k, force)?;
    Ok(1.0 - normalizer(a.len(), k) * rank_penalty(a, b, k))
}

/// Trustworthiness with ranks taken in `d`; requires 1 ≤ k < N/2.
pub fn trustworthiness(d: &DistanceMatrix, z: &Embedding, k: usize) -> Result<f64> {
    rank_metric(d, &z.distances(), k, false)
}

/// Continuity with ranks taken in the embedding; requires 1 ≤ k < N/2.
pub fn continuity(d: &DistanceMatrix, z: &Embedding, k: usize) -> Result<f64> {
    rank_metric(&z.distances(), d, k, false)
}

/// Trustworthiness of `embedded` against `original` for any two dissimilarity
/// matrices. `force` allows k ≥ N/2, where the value is no longer bounded.
pub fn trustworthiness_between(original: &DistanceMatrix, embedded: &DistanceMatrix, k: usize, force: bool) -> Result<f64> {
    rank_metric(original, embedded, k, force)
}

pub fn continuity_between(original: &DistanceMatrix, embedded: &DistanceMatrix, k: usize, force: bool) -> Result<f64> {
    rank_metric(embedded, original, k, force)
}

fn pair_sums(d: &DistanceMatrix, z: &Embedding) -> Result<(f64, f64)> {
    if d.len() != z.len() {
        return Err(Error::DimensionMismatch(format!("{} samples vs {} points", d.len(), z.len())));
    }
    let (mut resid, mut norm) = (0.0, 0.0);
    for i in 0..d.len() {
        for j in (i + 1)..d.len() {
            let e = z.dist(i, j);
            let r = d.get(i, j) - e;
            resid += r * r;
            norm += e * e;
        }
    }
    Ok((resid, norm))
}

/// Σ(d_ij − ‖z_i − z_j‖)² / Σ‖z_i − z_j‖², without a square root.
pub fn stress1(d: &DistanceMatrix, z: &Embedding) -> Result<f64> {
    let (resid, norm) = pair_sums(d, z)?;
    if !(norm > 0.0) {
        return Err(Error::DegenerateEmbedding);
    }
    Ok(resid / norm)
}

/// Square root of [`stress1`], Kruskal's usual form.
pub fn stress1_kruskal(d: &DistanceMatrix, z: &Embedding) -> Result<f64> {
    stress1(d, z).map(f64::sqrt)
}

pub fn pearson(x: &[f64], y: &[f64], what: &'static str) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DimensionMismatch(format!("correlation of {} and {} values", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::ZeroVariance(what));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shepard {
    /// (original, embedded) distance for every unordered pair i < j.
    pub pairs: Vec<(f64, f64)>,
    pub pearson_r: f64,
}

pub fn shepard(d: &DistanceMatrix, z: &Embedding) -> Result<Shepard> {
    let n = d.len();
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} samples vs {} points", z.len())));
    }
    let pairs: Vec<(f64, f64)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| (d.get(i, j), z.dist(i, j))).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let orig = pearson(&x, &y, "distances");
    let pearson_r = match orig {
        Err(Error::ZeroVariance(_)) => {
            let what = if x.iter().all(|&v| v == x[0]) { "original distances" } else { "embedded distances" };
            return Err(Error::ZeroVariance(what));
        }
        other => other?,
    };
    Ok(Shepard { pairs, pearson_r })
}

/// Pseudo-F of both spaces under the same label permutations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedF {
    pub observed_x: f64,
    pub observed_z: f64,
    pub permuted_x: Vec<f64>,
    pub permuted_z: Vec<f64>,
}

impl PairedF {
    pub fn correlation(&self) -> Result<f64> {
        pearson(&self.permuted_x, &self.permuted_z, "permuted pseudo-F")
    }

    /// Σ1{F_z^π < F_z} / Σ1{F_x^π < F_x}.
    pub fn rank_ratio(&self) -> Result<f64> {
        let below = |obs: f64, v: &[f64]| v.iter().filter(|&&f| f < obs).count();
        let den = below(self.observed_x, &self.permuted_x);
        if den == 0 {
            return Err(Error::DegenerateDenominator);
        }
        Ok(below(self.observed_z, &self.permuted_z) as f64 / den as f64)
    }
}

pub fn paired_f(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, k: usize, rng: &SeededRng) -> Result<PairedF> {
    if k == 0 {
        return Err(Error::InvalidParameter("permutation count must be at least 1".into()));
    }
    let x = SquaredDistances::from_distances(d);
    let zs = SquaredDistances::from_embedding(z);
    if zs.len() != x.len() {
        return Err(Error::DimensionMismatch(format!("{} samples vs {} points", x.len(), zs.len())));
    }
    let observed_x = x.pseudo_f(labels)?;
    let observed_z = zs.pseudo_f(labels)?;
    let pairs: Vec<(f64, f64)> = (0..k)
        .into_par_iter()
        .map(|i| {
            let y = permuted_labels(labels.values(), rng, i);
            let wrap = |e| Error::PermutationFailed { index: i, source: Box::new(e) };
            Ok((x.pseudo_f_raw(&y).map_err(wrap)?, zs.pseudo_f_raw(&y).map_err(wrap)?))
        })
        .collect::<Result<_>>()?;
    let (permuted_x, permuted_z) = pairs.into_iter().unzip();
    Ok(PairedF { observed_x, observed_z, permuted_x, permuted_z })
}

pub fn f_correlation(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, k: usize, rng: &SeededRng) -> Result<f64> {
    if k < 3 {
        return Err(Error::InvalidParameter("F-correlation needs at least 3 permutations".into()));
    }
    paired_f(d, z, labels, k, rng)?.correlation()
}

pub fn f_rank_ratio(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, k: usize, rng: &SeededRng) -> Result<f64> {
    paired_f(d, z, labels, k, rng)?.rank_ratio()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupGeometry {
    pub label: usize,
    pub size: usize,
    pub centroid: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub long_axis_variance: f64,
    pub short_axis_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidDistance {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterGeometry {
    pub groups: Vec<GroupGeometry>,
    pub centroid_distances: Vec<CentroidDistance>,
}

/// Eigenvalues (descending) and the angle of the leading eigenvector of a
/// symmetric 2×2 matrix.
fn eigen2(m: &[[f64; 2]; 2]) -> (f64, f64, f64) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean + r, mean - r, 0.5 * (2.0 * b).atan2(a - c))
}

/// Mean and sample covariance of a group's points.
pub fn group_moments(points: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = points.len() as f64;
    let mut m = [0.0; 2];
    for p in points {
        m[0] += p[0] / n;
        m[1] += p[1] / n;
    }
    let mut c = [[0.0; 2]; 2];
    for p in points {
        let (dx, dy) = (p[0] - m[0], p[1] - m[1]);
        c[0][0] += dx * dx;
        c[0][1] += dx * dy;
        c[1][1] += dy * dy;
    }
    let den = n - 1.0;
    c[0][0] /= den;
    c[0][1] /= den;
    c[1][1] /= den;
    c[1][0] = c[0][1];
    (m, c)
}

pub fn cluster_geometry(z: &Embedding, labels: &LabelVector) -> Result<ClusterGeometry> {
    if z.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} points vs {} labels", z.len(), labels.len())));
    }
    let mut groups = Vec::new();
    for (label, &size) in labels.group_sizes().iter().enumerate() {
        if size == 0 {
            continue;
        }
        if size < 3 {
            return Err(Error::GroupTooSmall { label, size });
        }
        let pts: Vec<[f64; 2]> = z.coords().iter().zip(labels.values()).filter(|(_, &y)| y == label).map(|(p, _)| *p).collect();
        let (centroid, covariance) = group_moments(&pts);
        let (long, short, _) = eigen2(&covariance);
        groups.push(GroupGeometry { label, size, centroid, covariance, long_axis_variance: long, short_axis_variance: short.max(0.0) });
    }
    let mut centroid_distances = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        for h in &groups[i + 1..] {
            let distance = crate::types::euclid(&g.centroid, &h.centroid);
            centroid_distances.push(CentroidDistance { a: g.label, b: h.label, distance });
        }
    }
    Ok(ClusterGeometry { groups, centroid_distances })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the x axis, in radians.
    pub rotation: f64,
}

/// Confidence region of a bivariate normal: semi-axes sqrt(eigenvalue · q)
/// with q = −2 ln(1 − level), the χ²₂ quantile.
pub fn confidence_ellipse(center: [f64; 2], covariance: &[[f64; 2]; 2], level: f64) -> Result<Ellipse> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!("confidence level {level} is outside [0, 1)")));
    }
    let (long, short, rotation) = eigen2(covariance);
    let scale = long.abs().max(1.0);
    if !(short >= -1e-12 * scale) || (covariance[0][1] - covariance[1][0]).abs() > 1e-12 * scale {
        return Err(Error::NonPSDCovariance(short));
    }
    let q = -2.0 * (1.0 - level).ln();
    Ok(Ellipse { center, semi_axes: [(long * q).sqrt(), (short.max(0.0) * q).sqrt()], rotation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityConfig {
    pub k_local: Option<usize>,
    pub k_global: Option<usize>,
    pub permutations: usize,
    pub seed: u64,
    /// Accept k ≥ N/2 and compute the rank metrics literally.
    pub force_k: bool,
    pub kruskal_root: bool,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self { k_local: None, k_global: None, permutations: 500, seed: 0, force_k: false, kruskal_root: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub n: usize,
    pub k_local: usize,
    pub k_global: usize,
    pub trustworthiness_local: f64,
    pub trustworthiness_global: f64,
    pub continuity_local: f64,
    pub continuity_global: f64,
    pub stress1: f64,
    pub stress1_kruskal: Option<f64>,
    pub shepard_r: f64,
    pub f_correlation: f64,
    pub f_rank_ratio: Option<f64>,
    pub permutations: usize,
    pub seed: u64,
    /// Set when a forced k ≥ N/2 was used.
    pub non_normative: bool,
    pub warnings: Vec<String>,
}

/// Default neighbourhood sizes: 7% and 75% of N, the latter capped below N/2.
/// The second value carries a warning when it had to be capped.
pub fn default_k(n: usize) -> Result<(usize, usize, Option<String>)> {
    let k_max = (n.saturating_sub(1)) / 2;
    if k_max < 1 {
        return Err(Error::InvalidK { k: 1, n, reason: "no k satisfies 1 ≤ k < N/2".into() });
    }
    let local = ((0.07 * n as f64).round() as usize).clamp(1, k_max);
    let wanted = (0.75 * n as f64).round() as usize;
    if wanted > k_max {
        let msg = format!("global k = {wanted} (75% of N = {n}) capped to {k_max} to keep k < N/2");
        return Ok((local, k_max, Some(msg)));
    }
    Ok((local, wanted.max(1), None))
}

pub fn evaluate(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, cfg: &QualityConfig) -> Result<QualityReport> {
    let n = d.len();
    if z.len() != n || labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} samples, {} points, {} labels", z.len(), labels.len())));
    }
    let mut warnings = Vec::new();
    let (dk_local, dk_global, note) = default_k(n)?;
    if cfg.k_global.is_none() {
        warnings.extend(note);
    }
    let k_local = cfg.k_local.unwrap_or(dk_local);
    let k_global = cfg.k_global.unwrap_or(dk_global);
    let dz = z.distances();
    let non_normative = cfg.force_k && (2 * k_local >= n || 2 * k_global >= n);
    if non_normative {
        warnings.push("k ≥ N/2 was forced; rank metrics are not bounded to [0, 1]".into());
    }

    let shep = shepard(d, z)?;
    let paired = paired_f(d, z, labels, cfg.permutations, &SeededRng::new(cfg.seed))?;
    let f_rank_ratio = match paired.rank_ratio() {
        Ok(r) => Some(r),
        Err(Error::DegenerateDenominator) => {
            warnings.push("F-rank-ratio undefined: no permuted original-space F lies below the observed one".into());
            None
        }
        Err(e) => return Err(e),
    };
    let s1 = stress1(d, z)?;
    Ok(QualityReport {
        n,
        k_local,
        k_global,
        trustworthiness_local: trustworthiness_between(d, &dz, k_local, cfg.force_k)?,
        trustworthiness_global: trustworthiness_between(d, &dz, k_global, cfg.force_k)?,
        continuity_local: continuity_between(d, &dz, k_local, cfg.force_k)?,
        continuity_global: continuity_between(d, &dz, k_global, cfg.force_k)?,
        stress1: s1,
        stress1_kruskal: cfg.kruskal_root.then(|| s1.sqrt()),
        shepard_r: shep.pearson_r,
        f_correlation: paired.correlation()?,
        f_rank_ratio,
        permutations: cfg.permutations,
        seed: cfg.seed,
        non_normative,
        warnings,
    })
}
