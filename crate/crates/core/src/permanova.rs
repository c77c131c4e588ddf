//! Pseudo-F statistic and its label-permutation null distribution.
//!
//! With ε_ij = 1{y_i = y_j} and sums over all ordered pairs,
//!
//! ```text
//! F = (Σ d² − 2 Σ ε d²) / (2 Σ ε d²) · (N − 2)
//! ```
//!
//! The (N − 2) factor is used for any number of groups.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::types::{DistanceMatrix, Embedding, LabelVector};

/// Per-worker buffers for repeated within-group sums.
struct Scratch {
    y: Vec<usize>,
    order: Vec<usize>,
    start: Vec<usize>,
    next: Vec<usize>,
}

impl Scratch {
    fn new(n: usize, groups: usize) -> Self {
        Self { y: vec![0; n], order: vec![0; n], start: vec![0; groups + 1], next: vec![0; groups] }
    }
}

/// Squared pairwise dissimilarities, the only input the pseudo-F needs.
#[derive(Debug, Clone)]
pub struct SquaredDistances {
    n: usize,
    values: Vec<f64>,
    total: f64,
}

impl SquaredDistances {
    pub fn from_distances(d: &DistanceMatrix) -> Self {
        Self::from_values(d.len(), d.as_slice().iter().map(|v| v * v).collect())
    }

    pub fn from_embedding(z: &Embedding) -> Self {
        Self::from_coords(z.coords())
    }

    pub fn from_coords(c: &[[f64; 2]]) -> Self {
        let n = c.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = c[i][0] - c[j][0];
                let dy = c[i][1] - c[j][1];
                let v = dx * dx + dy * dy;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::from_values(n, values)
    }

    fn from_values(n: usize, values: Vec<f64>) -> Self {
        let total = values.iter().sum();
        Self { n, values, total }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Σ over all ordered pairs.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Σ_{i,j} ε_ij d²_ij for the labelling `y`.
    pub fn within(&self, y: &[usize]) -> f64 {
        let groups = y.iter().copied().max().map_or(0, |m| m + 1);
        self.within_scratch(y, &mut Scratch::new(self.n, groups))
    }

    /// Same sum as [`within`](Self::within), reusing buffers. Members of each
    /// group are visited in index order, so the summation order matches.
    fn within_scratch(&self, y: &[usize], s: &mut Scratch) -> f64 {
        let n = self.n;
        s.next.iter_mut().for_each(|c| *c = 0);
        for &g in y {
            s.next[g] += 1;
        }
        let mut acc = 0;
        for (g, c) in s.next.iter_mut().enumerate() {
            s.start[g] = acc;
            acc += *c;
            *c = s.start[g];
        }
        s.start[s.next.len()] = acc;
        for (i, &g) in y.iter().enumerate() {
            s.order[s.next[g]] = i;
            s.next[g] += 1;
        }
        let mut sum = 0.0;
        for g in 0..s.next.len() {
            let m = &s.order[s.start[g]..s.start[g + 1]];
            for (a, &i) in m.iter().enumerate() {
                let row = &self.values[i * n..(i + 1) * n];
                for &j in &m[a + 1..] {
                    sum += row[j];
                }
            }
        }
        2.0 * sum
    }

    /// Pseudo-F for a raw label slice. Group count is not checked here.
    pub fn pseudo_f_raw(&self, y: &[usize]) -> Result<f64> {
        f_from_sums(self.total, self.within(y), self.n)
    }

    pub fn pseudo_f(&self, labels: &LabelVector) -> Result<f64> {
        check_inputs(self.n, labels)?;
        self.pseudo_f_raw(labels.values())
    }
}

fn check_inputs(n: usize, labels: &LabelVector) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} samples", labels.len())));
    }
    if n <= 2 {
        return Err(Error::TooFewSamples(n));
    }
    labels.require_groups()
}

/// Pseudo-F from the total and within-group sums of squared dissimilarities.
pub fn f_from_sums(total: f64, within: f64, n: usize) -> Result<f64> {
    if n <= 2 {
        return Err(Error::TooFewSamples(n));
    }
    if !(within > 0.0) {
        return Err(Error::DegenerateWithinGroup);
    }
    Ok((total - 2.0 * within) / (2.0 * within) * (n as f64 - 2.0))
}

pub fn pseudo_f(d: &DistanceMatrix, labels: &LabelVector) -> Result<f64> {
    SquaredDistances::from_distances(d).pseudo_f(labels)
}

/// Pseudo-F with squared Euclidean distances of the embedded points.
pub fn pseudo_f_embedding(z: &Embedding, labels: &LabelVector) -> Result<f64> {
    SquaredDistances::from_embedding(z).pseudo_f(labels)
}

/// Label vector shuffled with work-item stream `index` of `rng`.
pub fn permuted_labels(labels: &[usize], rng: &SeededRng, index: usize) -> Vec<usize> {
    let mut y = labels.to_vec();
    y.shuffle(&mut rng.stream(index as u64));
    y
}

/// Pseudo-F under `k` uniform label permutations; permutation `i` uses stream `i`.
pub fn permuted_f_values(space: &SquaredDistances, labels: &LabelVector, k: usize, rng: &SeededRng) -> Result<Vec<f64>> {
    check_inputs(space.len(), labels)?;
    let n = space.len();
    let groups = labels.values().iter().copied().max().map_or(0, |m| m + 1);
    (0..k)
        .into_par_iter()
        .map_init(
            || Scratch::new(n, groups),
            |s, i| {
                s.y.copy_from_slice(labels.values());
                s.y.shuffle(&mut rng.stream(i as u64));
                let y = std::mem::take(&mut s.y);
                let within = space.within_scratch(&y, s);
                s.y = y;
                f_from_sums(space.total, within, n).map_err(|e| Error::PermutationFailed { index: i, source: Box::new(e) })
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationDistribution {
    pub observed_f: f64,
    pub permuted_f: Vec<f64>,
    pub k: usize,
    pub seed: u64,
}

impl PermutationDistribution {
    /// Share of permuted values at or above the observed one; 0 is possible.
    pub fn p_value(&self) -> f64 {
        p_value(self)
    }

    /// (1 + count) / (1 + K), the usual Monte-Carlo correction.
    pub fn p_value_conservative(&self) -> f64 {
        (1 + exceed_count(self.observed_f, &self.permuted_f)) as f64 / (1 + self.permuted_f.len()) as f64
    }
}

pub fn permutation_distribution(
    space: &SquaredDistances,
    labels: &LabelVector,
    k: usize,
    rng: &SeededRng,
) -> Result<PermutationDistribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("permutation count must be at least 1".into()));
    }
    let observed_f = space.pseudo_f(labels)?;
    let permuted_f = permuted_f_values(space, labels, k, rng)?;
    Ok(PermutationDistribution { observed_f, permuted_f, k, seed: rng.seed() })
}

pub(crate) fn exceed_count(observed: f64, permuted: &[f64]) -> usize {
    permuted.iter().filter(|&&f| f >= observed).count()
}

/// p = (1/K) Σ 1{F^π ≥ F}.
pub fn p_value(dist: &PermutationDistribution) -> f64 {
    p_value_from(dist.observed_f, &dist.permuted_f)
}

pub fn p_value_from(observed: f64, permuted: &[f64]) -> f64 {
    if permuted.is_empty() {
        return 1.0;
    }
    exceed_count(observed, permuted) as f64 / permuted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn binary4() -> LabelVector {
        LabelVector::new(ids(4), vec![0, 0, 1, 1]).unwrap()
    }

    fn matrix(within: f64, between: f64) -> DistanceMatrix {
        let y = [0, 0, 1, 1];
        let rows = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| if i == j { 0.0 } else if y[i] == y[j] { within } else { between })
                    .collect()
            })
            .collect();
        DistanceMatrix::new(ids(4), rows).unwrap()
    }

    #[test]
    fn hand_evaluated_examples() {
        assert_eq!(pseudo_f(&matrix(1.0, 1.0), &binary4()).unwrap(), 1.0);
        assert_eq!(pseudo_f(&matrix(1.0, 2.0), &binary4()).unwrap(), 7.0);
        assert!(matches!(pseudo_f(&matrix(0.0, 1.0), &binary4()), Err(Error::DegenerateWithinGroup)));
    }

    #[test]
    fn precondition_errors() {
        let d = DistanceMatrix::new(ids(2), vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let l = LabelVector::new(ids(2), vec![0, 1]).unwrap();
        assert!(matches!(pseudo_f(&d, &l), Err(Error::TooFewSamples(2))));
        let one = LabelVector::new(ids(4), vec![0; 4]).unwrap();
        assert!(matches!(pseudo_f(&matrix(1.0, 1.0), &one), Err(Error::SingleGroup)));
    }

    #[test]
    fn embedding_variant() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [1.0, 3.0]];
        let z = Embedding::new(ids(4), pts.clone()).unwrap();
        let f = pseudo_f_embedding(&z, &binary4()).unwrap();
        let f_d = pseudo_f(&z.distances(), &binary4()).unwrap();
        assert!((f - f_d).abs() < 1e-10);
        let z3 = Embedding::new(ids(4), pts.iter().map(|p| [3.0 * p[0], 3.0 * p[1]]).collect()).unwrap();
        assert!((pseudo_f_embedding(&z3, &binary4()).unwrap() - f).abs() < 1e-12);

        let dup = Embedding::new(ids(4), vec![[0.0, 0.0], [0.0, 0.0], [2.0, 2.0], [2.0, 2.0]]).unwrap();
        assert!(matches!(pseudo_f_embedding(&dup, &binary4()), Err(Error::DegenerateWithinGroup)));
    }

    #[test]
    fn constant_matrix_permutations_all_one() {
        let dist = permutation_distribution(
            &SquaredDistances::from_distances(&matrix(1.0, 1.0)),
            &binary4(),
            20,
            &SeededRng::new(1),
        )
        .unwrap();
        assert!(dist.permuted_f.iter().all(|&f| f == 1.0));
        assert_eq!(dist.p_value(), 1.0);
        let single = permutation_distribution(
            &SquaredDistances::from_distances(&matrix(1.0, 2.0)),
            &binary4(),
            1,
            &SeededRng::new(1),
        )
        .unwrap();
        assert_eq!(single.permuted_f.len(), 1);
    }

    #[test]
    fn p_value_counts() {
        let mk = |obs: f64, perm: Vec<f64>| PermutationDistribution { observed_f: obs, k: perm.len(), permuted_f: perm, seed: 0 };
        assert_eq!(mk(1.0, vec![1.0, 2.0, 3.0]).p_value(), 1.0);
        assert_eq!(mk(5.0, vec![1.0, 2.0, 3.0]).p_value(), 0.0);
        assert_eq!(mk(2.5, vec![1.0, 2.0, 3.0, 4.0]).p_value(), 0.5);
        assert_eq!(mk(5.0, vec![1.0, 2.0, 3.0]).p_value_conservative(), 0.25);
    }

    #[test]
    fn zero_permutations_rejected() {
        let r = permutation_distribution(
            &SquaredDistances::from_distances(&matrix(1.0, 2.0)),
            &binary4(),
            0,
            &SeededRng::new(1),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
