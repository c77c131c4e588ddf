//! Validated domain types: abundance tables, distance matrices, embeddings and labels.
//!
//! Every type carries its sample ids. Joins between files go through
//! [`LabelVector::aligned_to`] and friends, never by position.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry and zero-diagonal checks of distance matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Tolerance on row sums of a compositional table.
pub const COMPOSITION_TOLERANCE: f64 = 1e-9;

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Positions of `target` ids inside `ids`, or an [`Error::IdMismatch`] listing the differences.
pub(crate) fn alignment(ids: &[String], target: &[String]) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut missing = Vec::new();
    let mut order = Vec::with_capacity(target.len());
    for t in target {
        match index.get(t.as_str()) {
            Some(&i) => order.push(i),
            None => missing.push(t.clone()),
        }
    }
    let wanted: HashSet<&str> = target.iter().map(String::as_str).collect();
    let unexpected: Vec<String> = ids.iter().filter(|s| !wanted.contains(s.as_str())).cloned().collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(Error::IdMismatch { missing, unexpected });
    }
    Ok(order)
}

/// Samples × features table. Entries are nonnegative unless built with [`AbundanceTable::signed`].
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceTable {
    sample_ids: Vec<String>,
    feature_ids: Vec<String>,
    values: Vec<Vec<f64>>,
    compositional: bool,
    nonnegative: bool,
}

impl AbundanceTable {
    pub fn new(sample_ids: Vec<String>, feature_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let table = Self::signed(sample_ids, feature_ids, values)?;
        if !table.nonnegative {
            table.check_nonnegative()?;
        }
        Ok(table)
    }

    /// A table of arbitrary finite values, e.g. untransformed normal draws.
    /// Only the Euclidean distance accepts negative entries.
    pub fn signed(sample_ids: Vec<String>, feature_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != sample_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} sample ids but {} rows",
                sample_ids.len(),
                values.len()
            )));
        }
        check_unique(&sample_ids)?;
        check_unique(&feature_ids)?;
        for (i, row) in values.iter().enumerate() {
            if row.len() != feature_ids.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} values but there are {} features",
                    row.len(),
                    feature_ids.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
            }
        }
        let nonnegative = values.iter().flatten().all(|&v| v >= 0.0);
        Ok(Self { sample_ids, feature_ids, values, compositional: false, nonnegative })
    }

    /// Fails with [`Error::NegativeEntry`] at the first negative value.
    pub fn check_nonnegative(&self) -> Result<()> {
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
            }
        }
        Ok(())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Like [`AbundanceTable::new`] but additionally requires every row to sum to one.
    pub fn compositional(sample_ids: Vec<String>, feature_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let mut table = Self::new(sample_ids, feature_ids, values)?;
        for (row, v) in table.values.iter().enumerate() {
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > COMPOSITION_TOLERANCE {
                return Err(Error::NotCompositional { row, sum });
            }
        }
        table.compositional = true;
        Ok(table)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn n_samples(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn is_compositional(&self) -> bool {
        self.compositional
    }
}

/// Symmetric, nonnegative N×N dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates a raw matrix. Asymmetry below [`SYMMETRY_TOLERANCE`] is removed by
    /// averaging the two triangles; anything larger is rejected.
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare { rows: n, row, cols: r.len() });
            }
        }
        Self::from_flat(ids, n, rows.into_iter().flatten().collect())
    }

    /// Row-major variant of [`DistanceMatrix::new`].
    pub fn from_flat(ids: Vec<String>, n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!("{} entries for a {n}x{n} matrix", data.len())));
        }
        if ids.len() != n {
            return Err(Error::DimensionMismatch(format!("{} ids for a {n}x{n} matrix", ids.len())));
        }
        check_unique(&ids)?;
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
            }
        }
        for i in 0..n {
            let v = data[i * n + i];
            if v > SYMMETRY_TOLERANCE {
                return Err(Error::NonZeroDiagonal { i, value: v });
            }
            data[i * n + i] = 0.0;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = data[i * n + j];
                let b = data[j * n + i];
                if a != b {
                    if (a - b).abs() >= SYMMETRY_TOLERANCE {
                        return Err(Error::AsymmetricMatrix { i, j, a, b });
                    }
                    let m = 0.5 * (a + b);
                    data[i * n + j] = m;
                    data[j * n + i] = m;
                }
            }
        }
        Ok(Self { ids, n, data })
    }

    /// Builds a matrix from a pair function evaluated once per unordered pair.
    pub(crate) fn from_pairs<F>(ids: Vec<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let n = ids.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j)?;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::from_flat(ids, n, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { ids: self.ids.clone(), n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// Reorders rows and columns so that the ids follow `order`.
    pub fn aligned_to(&self, order: &[String]) -> Result<Self> {
        let pos = alignment(&self.ids, order)?;
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for &i in &pos {
            for &j in &pos {
                data.push(self.data[i * n + j]);
            }
        }
        Ok(Self { ids: order.to_vec(), n, data })
    }
}

/// N×2 configuration of embedded points.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
}

impl Embedding {
    pub fn new(ids: Vec<String>, coords: Vec<[f64; 2]>) -> Result<Self> {
        if ids.len() != coords.len() {
            return Err(Error::DimensionMismatch(format!("{} ids but {} points", ids.len(), coords.len())));
        }
        check_unique(&ids)?;
        for (i, p) in coords.iter().enumerate() {
            for (j, v) in p.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
            }
        }
        Ok(Self { ids, coords })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        euclid(&self.coords[i], &self.coords[j])
    }

    /// Pairwise Euclidean distances of the configuration.
    pub fn distances(&self) -> DistanceMatrix {
        let n = self.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.dist(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DistanceMatrix { ids: self.ids.clone(), n, data }
    }

    pub fn aligned_to(&self, order: &[String]) -> Result<Self> {
        let pos = alignment(&self.ids, order)?;
        Ok(Self { ids: order.to_vec(), coords: pos.iter().map(|&i| self.coords[i]).collect() })
    }
}

#[inline]
pub(crate) fn euclid(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Discrete group labels, one per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    ids: Vec<String>,
    y: Vec<usize>,
    group_sizes: Vec<usize>,
}

impl LabelVector {
    pub fn new(ids: Vec<String>, y: Vec<usize>) -> Result<Self> {
        if ids.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} ids but {} labels", ids.len(), y.len())));
        }
        check_unique(&ids)?;
        let r = y.iter().copied().max().unwrap_or(0);
        let mut group_sizes = vec![0; r + 1];
        for &l in &y {
            group_sizes[l] += 1;
        }
        Ok(Self { ids, y, group_sizes })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[usize] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Counts per label value `0..=r`; absent values count 0.
    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Number of distinct labels present.
    pub fn n_groups(&self) -> usize {
        self.group_sizes.iter().filter(|&&c| c > 0).count()
    }

    /// All present groups have the same size.
    pub fn is_balanced(&self) -> bool {
        let mut present = self.group_sizes.iter().filter(|&&c| c > 0);
        match present.next() {
            Some(&first) => present.all(|&c| c == first),
            None => true,
        }
    }

    /// Fails with [`Error::SingleGroup`] unless at least two labels are present.
    pub fn require_groups(&self) -> Result<()> {
        if self.n_groups() < 2 {
            return Err(Error::SingleGroup);
        }
        Ok(())
    }

    pub fn aligned_to(&self, order: &[String]) -> Result<Self> {
        let pos = alignment(&self.ids, order)?;
        Self::new(order.to_vec(), pos.iter().map(|&i| self.y[i]).collect())
    }
}

/// The same-group indicator ε, with ε[i][j] = 1 iff y_i == y_j (diagonal included).
pub fn indicator_same_group(labels: &LabelVector) -> Vec<Vec<u8>> {
    let y = labels.values();
    y.iter().map(|a| y.iter().map(|b| u8::from(a == b)).collect()).collect()
}
