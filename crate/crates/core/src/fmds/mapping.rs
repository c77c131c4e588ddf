//! Quantile map between permuted pseudo-F distributions of two spaces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::permanova::{permuted_f_values, SquaredDistances};
use crate::rng::SeededRng;
use crate::types::{DistanceMatrix, Embedding, LabelVector};

/// Monotone piecewise-linear map from rank-paired sorted F samples.
///
/// Equal `sorted_fx` values are merged into one knot carrying the mean of
/// their `sorted_fz`, so the knots are strictly increasing. Outside the knot
/// range the first or last segment is extended linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingFunction {
    pub sorted_fx: Vec<f64>,
    pub sorted_fz: Vec<f64>,
    #[serde(skip)]
    knots: Vec<(f64, f64)>,
}

impl MappingFunction {
    /// Sorts both samples and pairs them by rank.
    pub fn from_samples(mut fx: Vec<f64>, mut fz: Vec<f64>) -> Result<Self> {
        if fx.len() != fz.len() || fx.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "mapping needs equally sized non-empty samples, got {} and {}",
                fx.len(),
                fz.len()
            )));
        }
        fx.sort_by(f64::total_cmp);
        fz.sort_by(f64::total_cmp);
        let mut knots: Vec<(f64, f64)> = Vec::with_capacity(fx.len());
        let mut i = 0;
        while i < fx.len() {
            let mut j = i + 1;
            while j < fx.len() && fx[j] == fx[i] {
                j += 1;
            }
            let mean = fz[i..j].iter().sum::<f64>() / (j - i) as f64;
            knots.push((fx[i], mean));
            i = j;
        }
        Ok(Self { sorted_fx: fx, sorted_fz: fz, knots })
    }

    pub fn len(&self) -> usize {
        self.sorted_fx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_fx.is_empty()
    }

    pub fn eval(&self, f: f64) -> f64 {
        let k = &self.knots;
        if k.len() == 1 {
            return k[0].1;
        }
        // Index of the segment [k[s], k[s+1]] used for interpolation or extrapolation.
        let s = match k.binary_search_by(|p| p.0.total_cmp(&f)) {
            Ok(i) => return k[i].1,
            Err(0) => 0,
            Err(i) if i >= k.len() => k.len() - 2,
            Err(i) => i - 1,
        };
        let (x0, y0) = k[s];
        let (x1, y1) = k[s + 1];
        y0 + (y1 - y0) * (f - x0) / (x1 - x0)
    }
}

/// Mapping built from `k` independent permutation pairs: π₁ drives the
/// original-space values (stream `rng.derive(1)`), π₂ the embedded ones
/// (`rng.derive(2)`).
pub fn build_mapping(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, k: usize, rng: &SeededRng) -> Result<MappingFunction> {
    build_mapping_sq(&SquaredDistances::from_distances(d), &SquaredDistances::from_embedding(z), labels, k, rng)
}

/// Like [`build_mapping`] with explicit generators for π₁ and π₂. Passing the
/// same generator twice applies identical permutations in both spaces.
pub fn build_mapping_with(
    d: &DistanceMatrix,
    z: &Embedding,
    labels: &LabelVector,
    k: usize,
    rng_x: &SeededRng,
    rng_z: &SeededRng,
) -> Result<MappingFunction> {
    mapping_from(&SquaredDistances::from_distances(d), &SquaredDistances::from_embedding(z), labels, k, rng_x, rng_z)
}

pub(crate) fn build_mapping_sq(
    x: &SquaredDistances,
    z: &SquaredDistances,
    labels: &LabelVector,
    k: usize,
    rng: &SeededRng,
) -> Result<MappingFunction> {
    mapping_from(x, z, labels, k, &rng.derive(1), &rng.derive(2))
}

fn mapping_from(
    x: &SquaredDistances,
    z: &SquaredDistances,
    labels: &LabelVector,
    k: usize,
    rng_x: &SeededRng,
    rng_z: &SeededRng,
) -> Result<MappingFunction> {
    if k == 0 {
        return Err(Error::InvalidParameter("mapping needs at least one permutation".into()));
    }
    let fx = permuted_f_values(x, labels, k, rng_x)?;
    let fz = permuted_f_values(z, labels, k, rng_z)?;
    MappingFunction::from_samples(fx, fz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_knots() {
        let m = MappingFunction::from_samples(vec![3.0, 1.0, 2.0], vec![20.0, 10.0, 40.0]).unwrap();
        assert_eq!(m.sorted_fx, vec![1.0, 2.0, 3.0]);
        assert_eq!(m.sorted_fz, vec![10.0, 20.0, 40.0]);
        assert_eq!(m.eval(2.0), 20.0);
        assert_eq!(m.eval(1.5), 15.0);
        assert_eq!(m.eval(2.5), 30.0);
    }

    #[test]
    fn extrapolates_linearly() {
        let m = MappingFunction::from_samples(vec![1.0, 2.0, 3.0], vec![10.0, 20.0, 40.0]).unwrap();
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(0.5), 5.0);
        assert_eq!(m.eval(4.0), 60.0);
    }

    #[test]
    fn ties_are_merged() {
        let m = MappingFunction::from_samples(vec![1.0, 1.0, 2.0], vec![1.0, 3.0, 5.0]).unwrap();
        assert_eq!(m.eval(1.0), 2.0);
        assert_eq!(m.eval(1.5), 3.5);
        let c = MappingFunction::from_samples(vec![1.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(c.eval(-5.0), 2.0);
        assert_eq!(c.eval(5.0), 2.0);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(MappingFunction::from_samples(vec![], vec![]).is_err());
        assert!(MappingFunction::from_samples(vec![1.0], vec![1.0, 2.0]).is_err());
    }
}
