//! F-informed MDS: metric MDS plus a label-aware term that pulls the
//! embedding's PERMANOVA significance towards that of the original space.
//!
//! With ε_ij = 1{y_i = y_j} and f = f_z(F_x) the objective is
//!
//! ```text
//! O(Z) = Σ_ij (d_ij − ‖z_i − z_j‖)² + λ |Σ_ij [1 − 2ε_ij (1 + f/(N−2))] ‖z_i − z_j‖²|
//! ```

mod mapping;
mod smds;

pub use mapping::{build_mapping, build_mapping_with, MappingFunction};
pub use smds::{smds_fit, smds_objective, smds_sweep, SmdsFit};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mds::{point_update, raw_stress_coords, smacof_fit, weighted_sweep, MdsConfig};
use crate::permanova::{p_value_from, permutation_distribution, permuted_f_values, SquaredDistances};
use crate::rng::SeededRng;
use crate::types::{DistanceMatrix, Embedding, LabelVector};

use mapping::build_mapping_sq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FmdsConfig {
    pub lambda: f64,
    pub map_permutations: usize,
    pub pvalue_permutations: usize,
    pub p_tol: f64,
    pub max_outer_iter: usize,
    pub seed: u64,
    /// Rebuild the mapping and δ before every single point update instead of
    /// once per sweep. N times slower.
    pub remap_every_point: bool,
    /// Re-evaluate δ before each point update (kept current in O(N) per
    /// point) instead of once per sweep.
    pub delta_per_point: bool,
    pub mds: MdsConfig,
}

impl Default for FmdsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            map_permutations: 999,
            pvalue_permutations: 999,
            p_tol: 0.01,
            max_outer_iter: 100,
            seed: 0,
            remap_every_point: false,
            delta_per_point: true,
            mds: MdsConfig::default(),
        }
    }
}

impl FmdsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} is outside the range [0, 1]; larger values can make the update non-convex",
                self.lambda
            )));
        }
        if self.map_permutations == 0 || self.pvalue_permutations == 0 {
            return Err(Error::InvalidParameter("permutation counts must be at least 1".into()));
        }
        if !(self.p_tol > 0.0) {
            return Err(Error::InvalidParameter("p_tol must be positive".into()));
        }
        self.mds.validate()
    }
}

/// State after one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmdsRecord {
    pub iteration: usize,
    /// Raw stress (half the ordered-pair sum) after the sweep.
    pub raw_stress: f64,
    /// Signed confirmatory sum after the sweep, with the f_z(F_x) used for it.
    pub confirmatory: f64,
    /// The same sum divided by 2 Σ ε‖z_i − z_j‖², i.e. F_z − f scaled by 1/(N−2).
    pub confirmatory_ratio: f64,
    pub objective: f64,
    pub p_z: f64,
    pub f_z: f64,
    /// δ at the start of the sweep.
    pub delta: f64,
    pub fz_fx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmdsTrace {
    pub p_x: f64,
    pub f_x: f64,
    /// p-value and pseudo-F of the metric MDS start.
    pub initial_p_z: f64,
    pub initial_f_z: f64,
    pub records: Vec<FmdsRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmdsFit {
    pub embedding: Embedding,
    /// The metric MDS configuration the fit started from.
    pub initial: Embedding,
    pub trace: FmdsTrace,
    pub p_x: f64,
    pub f_x: f64,
    pub p_z: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective value and the signed confirmatory sum inside its absolute value.
pub fn fmds_objective(d: &DistanceMatrix, z: &Embedding, labels: &LabelVector, fz_fx: f64, lambda: f64) -> (f64, f64) {
    let sq = SquaredDistances::from_embedding(z);
    let signed = confirmatory_signed(&sq, labels.values(), fz_fx);
    (2.0 * raw_stress_coords(d, z.coords()) + lambda * signed.abs(), signed)
}

fn confirmatory_signed(z: &SquaredDistances, y: &[usize], fz_fx: f64) -> f64 {
    let n = z.len() as f64;
    z.total() - 2.0 * z.within(y) * (1.0 + fz_fx / (n - 2.0))
}

/// +1 for a non-negative sum, −1 otherwise.
pub fn delta_sign(confirmatory_signed: f64) -> f64 {
    if confirmatory_signed < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Σ_j of the update weights for `g` balanced groups:
/// N + λδ[N − (2N/g)(1 + f/(N−2))].
pub fn quadratic_coefficient(n: usize, g: usize, lambda: f64, delta: f64, fz_fx: f64) -> f64 {
    let n = n as f64;
    let g = g as f64;
    n + lambda * delta * (n - 2.0 * n / g * (1.0 + fz_fx / (n - 2.0)))
}

/// The two-group coefficient (N(N−2) − Nλδf)/(N−2).
pub fn quadratic_coefficient_binary(n: usize, lambda: f64, delta: f64, fz_fx: f64) -> f64 {
    let n = n as f64;
    (n * (n - 2.0) - n * lambda * delta * fz_fx) / (n - 2.0)
}

/// Update weights for same-group and cross-group pairs.
fn weights(n: usize, lambda: f64, delta: f64, fz_fx: f64) -> (f64, f64) {
    let same = 1.0 + lambda * delta * (1.0 - 2.0 * (1.0 + fz_fx / (n as f64 - 2.0)));
    let diff = 1.0 + lambda * delta;
    (same, diff)
}

fn checked_coefficient(labels: &LabelVector, lambda: f64, delta: f64, fz_fx: f64) -> Result<f64> {
    let c = quadratic_coefficient(labels.len(), labels.n_groups(), lambda, delta, fz_fx);
    if !(c > 0.0) {
        return Err(Error::NonPositiveQuadraticCoefficient { coefficient: c, lambda });
    }
    Ok(c)
}

fn check_balanced(labels: &LabelVector) -> Result<()> {
    labels.require_groups()?;
    if !labels.is_balanced() {
        return Err(Error::UnbalancedDesign(labels.group_sizes().iter().copied().filter(|&c| c > 0).collect()));
    }
    Ok(())
}

/// New position of point `k` with everything else held fixed.
pub fn majorization_update(
    z: &Embedding,
    d: &DistanceMatrix,
    labels: &LabelVector,
    fz_fx: f64,
    delta: f64,
    lambda: f64,
    k: usize,
) -> Result<[f64; 2]> {
    check_balanced(labels)?;
    if z.len() != d.len() || labels.len() != d.len() || k >= d.len() {
        return Err(Error::DimensionMismatch(format!("{} points, {} samples, {} labels, k = {k}", z.len(), d.len(), labels.len())));
    }
    let c = checked_coefficient(labels, lambda, delta, fz_fx)?;
    let (same, diff) = weights(d.len(), lambda, delta, fz_fx);
    Ok(point_update(d, z.coords(), Some(labels.values()), k, same, diff, c))
}

/// Squared distances from point `k` to all others: (all, same group), ordered-pair totals.
fn point_sums(z: &[[f64; 2]], y: &[usize], k: usize) -> (f64, f64) {
    let (mut all, mut same) = (0.0, 0.0);
    for (j, zj) in z.iter().enumerate() {
        let dx = z[k][0] - zj[0];
        let dy = z[k][1] - zj[1];
        let v = dx * dx + dy * dy;
        all += v;
        if y[j] == y[k] {
            same += v;
        }
    }
    (2.0 * all, 2.0 * same)
}

/// A sweep in which δ and the coefficient are re-evaluated before every point,
/// with the confirmatory sums updated incrementally. Returns δ at the start.
fn sweep_with_point_delta(d: &DistanceMatrix, z: &mut [[f64; 2]], labels: &LabelVector, f: f64, lambda: f64) -> Result<f64> {
    let n = z.len();
    let y = labels.values();
    let sq = SquaredDistances::from_coords(z);
    let (mut total, mut within) = (sq.total(), sq.within(y));
    let scale = 2.0 * (1.0 + f / (n as f64 - 2.0));
    let first = delta_sign(total - scale * within);
    for k in 0..n {
        let delta = delta_sign(total - scale * within);
        let c = checked_coefficient(labels, lambda, delta, f)?;
        let (same, diff) = weights(n, lambda, delta, f);
        let (old_all, old_same) = point_sums(z, y, k);
        z[k] = point_update(d, z, Some(y), k, same, diff, c);
        let (new_all, new_same) = point_sums(z, y, k);
        total += new_all - old_all;
        within += new_same - old_same;
    }
    Ok(first)
}

/// Mapping and p-value of a configuration.
struct Evaluation {
    mapping: MappingFunction,
    f_z: f64,
    p_z: f64,
}

/// Step-by-step F-MDS driver. [`fmds_fit`] runs it to completion.
pub struct FmdsSolver<'a> {
    d: &'a DistanceMatrix,
    labels: &'a LabelVector,
    cfg: FmdsConfig,
    rng: SeededRng,
    x: SquaredDistances,
    initial: Embedding,
    z: Vec<[f64; 2]>,
    current: Evaluation,
    trace: FmdsTrace,
}

impl<'a> FmdsSolver<'a> {
    /// Starts from the metric MDS embedding of `d`.
    pub fn new(d: &'a DistanceMatrix, labels: &'a LabelVector, cfg: FmdsConfig) -> Result<Self> {
        cfg.validate()?;
        check_balanced(labels)?;
        let start = smacof_fit(d, &cfg.mds)?;
        Self::from_embedding(d, labels, start, cfg)
    }

    pub fn from_embedding(d: &'a DistanceMatrix, labels: &'a LabelVector, start: Embedding, cfg: FmdsConfig) -> Result<Self> {
        cfg.validate()?;
        check_balanced(labels)?;
        if labels.ids() != d.ids() || start.ids() != d.ids() {
            return Err(Error::DimensionMismatch("distance, label and embedding ids must be in the same order".into()));
        }
        let rng = SeededRng::new(cfg.seed);
        let x = SquaredDistances::from_distances(d);
        let px = permutation_distribution(&x, labels, cfg.pvalue_permutations, &rng.derive(0))?;
        let z = start.coords().to_vec();
        let mut solver = Self {
            d,
            labels,
            cfg,
            rng,
            x,
            initial: start,
            z,
            current: Evaluation { mapping: MappingFunction::from_samples(vec![0.0], vec![0.0])?, f_z: 0.0, p_z: 1.0 },
            trace: FmdsTrace { p_x: px.p_value(), f_x: px.observed_f, initial_p_z: 1.0, initial_f_z: 0.0, records: Vec::new() },
        };
        solver.current = solver.evaluate(0)?;
        solver.trace.initial_p_z = solver.current.p_z;
        solver.trace.initial_f_z = solver.current.f_z;
        Ok(solver)
    }

    fn evaluate(&self, t: usize) -> Result<Evaluation> {
        let rng = self.rng.derive(1 + t as u64);
        let zsq = SquaredDistances::from_coords(&self.z);
        let mapping = build_mapping_sq(&self.x, &zsq, self.labels, self.cfg.map_permutations, &rng)?;
        let f_z = zsq.pseudo_f(self.labels)?;
        let p_z = if self.cfg.pvalue_permutations == self.cfg.map_permutations {
            p_value_from(f_z, &mapping.sorted_fz)
        } else {
            p_value_from(f_z, &permuted_f_values(&zsq, self.labels, self.cfg.pvalue_permutations, &rng.derive(3))?)
        };
        Ok(Evaluation { mapping, f_z, p_z })
    }

    pub fn p_x(&self) -> f64 {
        self.trace.p_x
    }

    pub fn f_x(&self) -> f64 {
        self.trace.f_x
    }

    pub fn p_z(&self) -> f64 {
        self.current.p_z
    }

    pub fn iterations(&self) -> usize {
        self.trace.records.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.z
    }

    pub fn mapping(&self) -> &MappingFunction {
        &self.current.mapping
    }

    pub fn trace(&self) -> &FmdsTrace {
        &self.trace
    }

    pub fn converged(&self) -> bool {
        (self.current.p_z - self.trace.p_x).abs() < self.cfg.p_tol
    }

    /// The f_z(F_x), δ and coefficient the next sweep would use.
    fn parameters(&self, mapping: &MappingFunction) -> Result<(f64, f64, f64)> {
        let f = mapping.eval(self.trace.f_x);
        let signed = confirmatory_signed(&SquaredDistances::from_coords(&self.z), self.labels.values(), f);
        let delta = delta_sign(signed);
        let c = checked_coefficient(self.labels, self.cfg.lambda, delta, f)?;
        Ok((f, delta, c))
    }

    /// One outer iteration: a sweep over all points, then a fresh mapping and p_z.
    pub fn step(&mut self) -> Result<&FmdsRecord> {
        let t = self.trace.records.len() + 1;
        let n = self.z.len();
        let y = self.labels.values();
        let (f, delta) = if self.cfg.remap_every_point {
            let mut last = (0.0, 1.0);
            for k in 0..n {
                let rng = self.rng.derive(1 + t as u64).derive(4 + k as u64);
                let zsq = SquaredDistances::from_coords(&self.z);
                let mapping = build_mapping_sq(&self.x, &zsq, self.labels, self.cfg.map_permutations, &rng)?;
                let (f, delta, c) = self.parameters(&mapping)?;
                let (same, diff) = weights(n, self.cfg.lambda, delta, f);
                self.z[k] = point_update(self.d, &self.z, Some(y), k, same, diff, c);
                last = (f, delta);
            }
            last
        } else if self.cfg.delta_per_point {
            let f = self.current.mapping.eval(self.trace.f_x);
            let delta = sweep_with_point_delta(self.d, &mut self.z, self.labels, f, self.cfg.lambda)?;
            (f, delta)
        } else {
            let (f, delta, c) = self.parameters(&self.current.mapping)?;
            let (same, diff) = weights(n, self.cfg.lambda, delta, f);
            weighted_sweep(self.d, &mut self.z, Some(y), same, diff, c);
            (f, delta)
        };
        self.current = self.evaluate(t)?;

        let zsq = SquaredDistances::from_coords(&self.z);
        let signed = confirmatory_signed(&zsq, y, f);
        let within = zsq.within(y);
        let stress = raw_stress_coords(self.d, &self.z);
        self.trace.records.push(FmdsRecord {
            iteration: t,
            raw_stress: stress,
            confirmatory: signed,
            confirmatory_ratio: if within > 0.0 { signed / (2.0 * within) } else { f64::NAN },
            objective: 2.0 * stress + self.cfg.lambda * signed.abs(),
            p_z: self.current.p_z,
            f_z: self.current.f_z,
            delta,
            fz_fx: f,
        });
        Ok(self.trace.records.last().expect("record just pushed"))
    }

    pub fn finish(self) -> Result<FmdsFit> {
        let converged = self.converged();
        Ok(FmdsFit {
            embedding: Embedding::new(self.d.ids().to_vec(), self.z)?,
            initial: self.initial,
            p_x: self.trace.p_x,
            f_x: self.trace.f_x,
            p_z: self.current.p_z,
            iterations: self.trace.records.len(),
            converged,
            trace: self.trace,
        })
    }

    /// Iterates until |p_z − p_x| < p_tol or the iteration budget is spent.
    pub fn run(mut self) -> Result<FmdsFit> {
        while !self.converged() {
            if self.iterations() >= self.cfg.max_outer_iter {
                return Err(Error::MaxIterationsExceeded(Box::new(self.finish()?)));
            }
            self.step()?;
        }
        self.finish()
    }
}

pub fn fmds_fit(d: &DistanceMatrix, labels: &LabelVector, cfg: &FmdsConfig) -> Result<FmdsFit> {
    FmdsSolver::new(d, labels, *cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mds::guttman_sweep;
    use rand::Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn labels(y: Vec<usize>) -> LabelVector {
        LabelVector::new(ids(y.len()), y).unwrap()
    }

    fn emb(p: Vec<[f64; 2]>) -> Embedding {
        Embedding::new(ids(p.len()), p).unwrap()
    }

    fn random_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = SeededRng::new(seed).stream(0);
        (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()
    }

    #[test]
    fn objective_without_lambda_is_twice_raw_stress() {
        let z = emb(random_points(6, 1));
        let d = emb(random_points(6, 2)).distances();
        let y = labels(vec![0, 0, 0, 1, 1, 1]);
        let (o, _) = fmds_objective(&d, &z, &y, 1.3, 0.0);
        assert!((o - 2.0 * crate::mds::raw_stress(&d, &z)).abs() < 1e-12);
    }

    #[test]
    fn confirmatory_sign_examples() {
        let y = labels(vec![0, 0, 1, 1]);
        let z = emb(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        let d = z.distances();
        let (_, s) = fmds_objective(&d, &z, &y, 2.0, 1.0);
        // Only the 8 ordered between pairs remain, each at squared distance 1.
        assert_eq!(s, 8.0);
        assert_eq!(delta_sign(s), 1.0);

        // A wide group around a tight one: within-group spread dominates.
        let y = labels(vec![0, 0, 0, 0, 1, 1]);
        let z = emb(vec![[10.0, 0.0], [0.0, 10.0], [-10.0, 0.0], [0.0, -10.0], [0.0, 0.1], [0.0, -0.1]]);
        let (_, s) = fmds_objective(&z.distances(), &z, &y, 0.0, 1.0);
        assert!(s < 0.0);
        assert_eq!(delta_sign(s), -1.0);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_sign(3.2), 1.0);
        assert_eq!(delta_sign(-0.4), -1.0);
        assert_eq!(delta_sign(0.0), 1.0);
    }

    #[test]
    fn coefficient_is_the_weight_sum() {
        let n = 8;
        let y = labels(vec![0, 1, 2, 3, 0, 1, 2, 3]);
        for &(lambda, delta, f) in &[(0.3, 1.0, 2.0), (0.9, -1.0, 5.0), (1.0, 1.0, 0.1)] {
            let (same, diff) = weights(n, lambda, delta, f);
            let k = 0;
            let sum: f64 = (0..n).map(|j| if y.values()[j] == y.values()[k] { same } else { diff }).sum();
            assert!((sum - quadratic_coefficient(n, 4, lambda, delta, f)).abs() < 1e-12);
        }
        assert!((quadratic_coefficient(4, 2, 0.7, -1.0, 3.0) - quadratic_coefficient_binary(4, 0.7, -1.0, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn non_positive_coefficient() {
        let y = labels(vec![0, 0, 1, 1]);
        let z = emb(random_points(4, 3));
        let d = emb(random_points(4, 4)).distances();
        // N(N−2) − Nλδf = 8 − 4f ≤ 0 for f ≥ 2.
        let r = majorization_update(&z, &d, &y, 3.0, 1.0, 1.0, 0);
        assert!(matches!(r, Err(Error::NonPositiveQuadraticCoefficient { .. })));
        assert!(majorization_update(&z, &d, &y, 1.0, 1.0, 1.0, 0).is_ok());
    }

    #[test]
    fn unbalanced_is_rejected() {
        let y = labels(vec![0, 0, 0, 1]);
        let z = emb(random_points(4, 3));
        let d = z.distances();
        assert!(matches!(majorization_update(&z, &d, &y, 1.0, 1.0, 0.5, 0), Err(Error::UnbalancedDesign(_))));
        let cfg = FmdsConfig { map_permutations: 10, pvalue_permutations: 10, ..Default::default() };
        assert!(matches!(fmds_fit(&d, &y, &cfg), Err(Error::UnbalancedDesign(_))));
    }

    #[test]
    fn lambda_out_of_range() {
        let cfg = FmdsConfig { lambda: 1.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter(m)) if m.contains("[0, 1]")));
    }

    #[test]
    fn zero_lambda_matches_smacof() {
        let n = 12;
        let d = emb(random_points(n, 5)).distances();
        let y = labels((0..n).map(|i| i % 2).collect());
        let start = emb(random_points(n, 6));
        let cfg = FmdsConfig { lambda: 0.0, map_permutations: 5, pvalue_permutations: 5, ..Default::default() };
        let mut solver = FmdsSolver::from_embedding(&d, &y, start.clone(), cfg).unwrap();
        let mut reference = start.coords().to_vec();
        for _ in 0..20 {
            solver.step().unwrap();
            guttman_sweep(&d, &mut reference);
            assert_eq!(solver.coords(), &reference[..]);
        }
    }

    #[test]
    fn fixed_parameters_objective_does_not_increase() {
        let n = 20;
        let d = emb(random_points(n, 7)).distances();
        let y = labels((0..n).map(|i| i % 2).collect());
        let mut z = random_points(n, 8);
        for &(lambda, delta, f) in &[(0.5, 1.0, 1.0), (1.0, -1.0, 4.0), (0.2, -1.0, 0.5)] {
            let (same, diff) = weights(n, lambda, delta, f);
            let c = quadratic_coefficient(n, 2, lambda, delta, f);
            let linear = |z: &[[f64; 2]]| {
                2.0 * raw_stress_coords(&d, z) + lambda * delta * confirmatory_signed(&SquaredDistances::from_coords(z), y.values(), f)
            };
            for _ in 0..10 {
                let before = linear(&z);
                weighted_sweep(&d, &mut z, Some(y.values()), same, diff, c);
                assert!(linear(&z) <= before + 1e-9 * before.abs().max(1.0));
            }
        }
    }

    #[test]
    fn contraction_raises_pseudo_f() {
        // Symmetric instance: two groups on a circle, original space strongly separated.
        let n = 8;
        let y = labels((0..n).map(|i| i % 2).collect());
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / n as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let z = emb(pts.clone());
        let d = z.distances();
        let f = 50.0;
        let (_, s) = fmds_objective(&d, &z, &y, f, 1.0);
        assert_eq!(delta_sign(s), -1.0);
        let before = crate::permanova::pseudo_f_embedding(&z, &y).unwrap();
        let (same, diff) = weights(n, 1.0, -1.0, f);
        let mut moved = pts;
        weighted_sweep(&d, &mut moved, Some(y.values()), same, diff, quadratic_coefficient(n, 2, 1.0, -1.0, f));
        let after = crate::permanova::pseudo_f_embedding(&emb(moved), &y).unwrap();
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn already_significant_start_needs_no_iterations() {
        let n = 20;
        let pts: Vec<[f64; 2]> = (0..n).map(|i| [if i % 2 == 0 { 0.0 } else { 10.0 }, i as f64 * 0.01]).collect();
        let z = emb(pts);
        let d = z.distances();
        let y = labels((0..n).map(|i| i % 2).collect());
        let cfg = FmdsConfig { map_permutations: 99, pvalue_permutations: 99, ..Default::default() };
        let fit = fmds_fit(&d, &y, &cfg).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations, 0);
        assert!(fit.trace.records.is_empty());
        assert_eq!(fit.embedding, fit.initial);
    }
}
