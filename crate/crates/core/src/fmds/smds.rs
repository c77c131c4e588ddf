//! Supervised MDS baseline:
//!
//! ```text
//! (1 − α) Σ_{i<j} (d_ij − ‖z_i − z_j‖)² + α Σ_{y_i<y_j} (y_j − y_i) Σ_s (d_ij/√2 − (z_js − z_is))²
//! ```

use crate::error::{Error, Result};
use crate::mds::{initial_configuration, raw_stress_coords, MdsConfig, COINCIDENCE_EPS};
use crate::types::{euclid, DistanceMatrix, Embedding, LabelVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SmdsFit {
    pub embedding: Embedding,
    /// Objective of the start configuration followed by one value per sweep.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

pub fn smds_objective(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, alpha: f64) -> f64 {
    objective_coords(d, z.coords(), labels.values(), alpha)
}

fn objective_coords(d: &DistanceMatrix, z: &[[f64; 2]], y: &[usize], alpha: f64) -> f64 {
    let n = z.len();
    let mut sup = 0.0;
    for i in 0..n {
        for j in 0..n {
            if y[j] > y[i] {
                let a = d.get(i, j) / std::f64::consts::SQRT_2;
                let c = (y[j] - y[i]) as f64;
                let r0 = a - (z[j][0] - z[i][0]);
                let r1 = a - (z[j][1] - z[i][1]);
                sup += c * (r0 * r0 + r1 * r1);
            }
        }
    }
    (1.0 - alpha) * raw_stress_coords(d, z) + alpha * sup
}

/// One Gauss–Seidel pass. Each point moves to
/// [(1−α) Σ_j (z_j + d_jk u_jk) + α (Σ_{y_i<y_k} c (z_i + a) + Σ_{y_j>y_k} c (z_j − a))] / [(1−α) N + α Σ c]
/// with u_jk the unit vector from z_j to z_k, a = (d/√2)(1, 1) and c the label gap.
pub fn smds_sweep(d: &DistanceMatrix, z: &mut [[f64; 2]], y: &[usize], alpha: f64) {
    let n = z.len();
    for k in 0..n {
        let zk = z[k];
        let row = d.row(k);
        let mut stress = [0.0; 2];
        let mut sup = [0.0; 2];
        let mut weight = 0.0;
        for (j, zj) in z.iter().enumerate() {
            stress[0] += zj[0];
            stress[1] += zj[1];
            let dist = euclid(&zk, zj);
            if dist >= COINCIDENCE_EPS {
                let s = row[j] / dist;
                stress[0] += s * (zk[0] - zj[0]);
                stress[1] += s * (zk[1] - zj[1]);
            }
            if y[j] != y[k] {
                let a = row[j] / std::f64::consts::SQRT_2;
                let (c, shift) = if y[j] < y[k] { ((y[k] - y[j]) as f64, a) } else { ((y[j] - y[k]) as f64, -a) };
                sup[0] += c * (zj[0] + shift);
                sup[1] += c * (zj[1] + shift);
                weight += c;
            }
        }
        let den = (1.0 - alpha) * n as f64 + alpha * weight;
        if den > 0.0 {
            z[k] = [
                ((1.0 - alpha) * stress[0] + alpha * sup[0]) / den,
                ((1.0 - alpha) * stress[1] + alpha * sup[1]) / den,
            ];
        }
    }
}

pub fn smds_fit(d: &DistanceMatrix, labels: &LabelVector, alpha: f64, cfg: &MdsConfig) -> Result<SmdsFit> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} is outside [0, 1]")));
    }
    if labels.ids() != d.ids() {
        return Err(Error::DimensionMismatch("distance and label ids must be in the same order".into()));
    }
    let y = labels.values();
    let mut z = initial_configuration(d, cfg.init)?.coords().to_vec();
    let mut history = vec![objective_coords(d, &z, y, alpha)];
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        let prev = *history.last().unwrap();
        smds_sweep(d, &mut z, y, alpha);
        iterations += 1;
        let cur = objective_coords(d, &z, y, alpha);
        history.push(cur);
        if prev <= 0.0 || (prev - cur) / prev < cfg.stress_tol {
            break;
        }
    }
    Ok(SmdsFit { embedding: Embedding::new(d.ids().to_vec(), z)?, objective_history: history, iterations })
}
