//! Metric MDS: raw stress, classical scaling and SMACOF majorization in two dimensions.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::types::{euclid, DistanceMatrix, Embedding};

/// Pairs closer than this are skipped in the Guttman transform.
pub const COINCIDENCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MdsInit {
    Classical,
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdsConfig {
    pub max_iter: usize,
    /// Stop once the relative decrease of raw stress falls below this.
    pub stress_tol: f64,
    pub init: MdsInit,
}

impl Default for MdsConfig {
    fn default() -> Self {
        Self { max_iter: 300, stress_tol: 1e-6, init: MdsInit::Classical }
    }
}

impl MdsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.stress_tol > 0.0) {
            return Err(Error::InvalidParameter("stress_tol must be positive".into()));
        }
        Ok(())
    }
}

/// (1/2) Σ over ordered pairs of (d_ij − ‖z_i − z_j‖)².
pub fn raw_stress(d: &DistanceMatrix, z: &Embedding) -> f64 {
    raw_stress_coords(d, z.coords())
}

pub(crate) fn raw_stress_coords(d: &DistanceMatrix, z: &[[f64; 2]]) -> f64 {
    let n = z.len();
    let mut s = 0.0;
    for i in 0..n {
        let row = d.row(i);
        for j in (i + 1)..n {
            let r = row[j] - euclid(&z[i], &z[j]);
            s += r * r;
        }
    }
    s
}

/// Torgerson scaling: top two eigenpairs of the double-centred −½D² matrix.
/// Negative eigenvalues give a zero coordinate column.
pub fn classical_init(d: &DistanceMatrix) -> Result<Embedding> {
    let n = d.len();
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j) * d.get(i, j));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::try_new(b, 1e-14, 10_000).ok_or(Error::EigenFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let mut coords = vec![[0.0; 2]; n];
    for (axis, &e) in order.iter().take(2).enumerate() {
        let value = eig.eigenvalues[e];
        if !value.is_finite() {
            return Err(Error::EigenFailure);
        }
        let scale = value.max(0.0).sqrt();
        let v = eig.eigenvectors.column(e);
        // Fix the sign so the largest component is positive.
        let pivot = (0..n).max_by(|&a, &c| v[a].abs().total_cmp(&v[c].abs())).unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * v[i] * scale;
        }
    }
    Embedding::new(d.ids().to_vec(), coords)
}

pub fn random_init(d: &DistanceMatrix, seed: u64) -> Result<Embedding> {
    let n = d.len();
    let mean = if n > 1 { d.as_slice().iter().sum::<f64>() / (n * (n - 1)) as f64 } else { 1.0 };
    let scale = if mean > 0.0 { mean } else { 1.0 };
    let mut rng = SeededRng::new(seed).stream(0);
    let coords = (0..n).map(|_| [rng.random_range(-scale..scale), rng.random_range(-scale..scale)]).collect();
    Embedding::new(d.ids().to_vec(), coords)
}

/// One Gauss–Seidel pass of the weighted majorization update
///
/// ```text
/// z_k ← (1/c) Σ_j [ w_jk z_j + d_jk (z_k − z_j)/‖z_k − z_j‖ ]
/// ```
///
/// where `w_jk` is `w_same` when `y_j == y_k` (including j = k) and `w_diff`
/// otherwise. With unit weights and c = N this is the Guttman transform.
pub(crate) fn weighted_sweep(
    d: &DistanceMatrix,
    z: &mut [[f64; 2]],
    y: Option<&[usize]>,
    w_same: f64,
    w_diff: f64,
    coefficient: f64,
) {
    for k in 0..z.len() {
        z[k] = point_update(d, z, y, k, w_same, w_diff, coefficient);
    }
}

/// The majorization update of point `k` alone; see [`weighted_sweep`].
pub(crate) fn point_update(
    d: &DistanceMatrix,
    z: &[[f64; 2]],
    y: Option<&[usize]>,
    k: usize,
    w_same: f64,
    w_diff: f64,
    coefficient: f64,
) -> [f64; 2] {
    let zk = z[k];
    let row = d.row(k);
    let mut acc = [0.0; 2];
    for (j, zj) in z.iter().enumerate() {
        let w = match y {
            Some(y) if y[j] != y[k] => w_diff,
            _ => w_same,
        };
        acc[0] += w * zj[0];
        acc[1] += w * zj[1];
        let dist = euclid(&zk, zj);
        if dist >= COINCIDENCE_EPS {
            let s = row[j] / dist;
            acc[0] += s * (zk[0] - zj[0]);
            acc[1] += s * (zk[1] - zj[1]);
        }
    }
    [acc[0] / coefficient, acc[1] / coefficient]
}

/// One SMACOF iteration over all points, in place.
pub fn guttman_sweep(d: &DistanceMatrix, z: &mut [[f64; 2]]) {
    let n = z.len() as f64;
    weighted_sweep(d, z, None, 1.0, 1.0, n);
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsFit {
    pub embedding: Embedding,
    /// Raw stress of the start configuration followed by one value per iteration.
    pub stress_history: Vec<f64>,
    pub iterations: usize,
}

impl MdsFit {
    pub fn stress(&self) -> f64 {
        *self.stress_history.last().unwrap_or(&0.0)
    }
}

pub fn initial_configuration(d: &DistanceMatrix, init: MdsInit) -> Result<Embedding> {
    match init {
        MdsInit::Classical => classical_init(d),
        MdsInit::Random(seed) => random_init(d, seed),
    }
}

/// SMACOF from the configured initialisation.
pub fn smacof_fit(d: &DistanceMatrix, cfg: &MdsConfig) -> Result<Embedding> {
    Ok(smacof(d, cfg)?.embedding)
}

pub fn smacof(d: &DistanceMatrix, cfg: &MdsConfig) -> Result<MdsFit> {
    cfg.validate()?;
    let start = initial_configuration(d, cfg.init)?;
    smacof_from(d, start, cfg)
}

/// SMACOF from a given configuration.
pub fn smacof_from(d: &DistanceMatrix, start: Embedding, cfg: &MdsConfig) -> Result<MdsFit> {
    cfg.validate()?;
    if start.len() != d.len() {
        return Err(Error::DimensionMismatch(format!("{} points for {} samples", start.len(), d.len())));
    }
    let mut z = start.coords().to_vec();
    let spread = (0..z.len()).flat_map(|i| (i + 1..z.len()).map(move |j| (i, j))).any(|(i, j)| euclid(&z[i], &z[j]) >= COINCIDENCE_EPS);
    if !spread && d.as_slice().iter().any(|&v| v > 0.0) {
        return Err(Error::CoincidentPoints);
    }

    let mut history = vec![raw_stress_coords(d, &z)];
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        let prev = *history.last().unwrap();
        guttman_sweep(d, &mut z);
        iterations += 1;
        let cur = raw_stress_coords(d, &z);
        history.push(cur);
        if prev <= 0.0 || (prev - cur) / prev < cfg.stress_tol {
            break;
        }
    }
    Ok(MdsFit { embedding: Embedding::new(d.ids().to_vec(), z)?, stress_history: history, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn from_points(p: &[[f64; 2]]) -> DistanceMatrix {
        Embedding::new(ids(p.len()), p.to_vec()).unwrap().distances()
    }

    #[test]
    fn stress_examples() {
        let d = DistanceMatrix::new(ids(2), vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let z = Embedding::new(ids(2), vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(raw_stress(&d, &z), 1.0);
        let pts = [[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]];
        let z = Embedding::new(ids(3), pts.to_vec()).unwrap();
        assert_eq!(raw_stress(&from_points(&pts), &z), 0.0);
    }

    #[test]
    fn classical_recovers_a_line() {
        let d = from_points(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [7.0, 0.0]]);
        let z = classical_init(&d).unwrap();
        for i in 0..4 {
            assert!(z.coords()[i][1].abs() < 1e-6);
            for j in 0..4 {
                assert!((z.dist(i, j) - d.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn classical_equilateral_triangle() {
        let d = DistanceMatrix::new(ids(3), vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let z = classical_init(&d).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((z.dist(i, j) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classical_needs_three_points() {
        let d = DistanceMatrix::new(ids(2), vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(classical_init(&d), Err(Error::TooFewSamples(2))));
    }

    #[test]
    fn fixed_point_stops_after_one_iteration() {
        let pts = [[0.0, 0.0], [1.0, 2.0], [3.0, -1.0], [-2.0, 0.5]];
        let d = from_points(&pts);
        let start = Embedding::new(ids(4), pts.to_vec()).unwrap();
        let fit = smacof_from(&d, start, &MdsConfig::default()).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.stress() < 1e-24);
    }

    #[test]
    fn collapsed_start_is_rejected() {
        let d = from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let start = Embedding::new(ids(3), vec![[1.0, 1.0]; 3]).unwrap();
        assert!(matches!(smacof_from(&d, start, &MdsConfig::default()), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn bad_config() {
        let d = from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let cfg = MdsConfig { max_iter: 0, ..Default::default() };
        assert!(smacof(&d, &cfg).is_err());
        let cfg = MdsConfig { stress_tol: 0.0, ..Default::default() };
        assert!(smacof(&d, &cfg).is_err());
    }
}
