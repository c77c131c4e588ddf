//! Synthetic four-feature datasets: a two-group truncated-normal
//! compositional set and a three-group normal set.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::types::{AbundanceTable, LabelVector};

/// Standardized truncation points beyond this keep less than 1e-6 of the mass.
const MAX_STANDARDIZED_BOUND: f64 = 4.753424308822899;

pub const BINARY_MEAN: [f64; 4] = [0.25; 4];
/// The group shift (1, −1, 0, 0)/(20√2).
pub const BINARY_SHIFT: [f64; 4] = [
    1.0 / (20.0 * std::f64::consts::SQRT_2),
    -1.0 / (20.0 * std::f64::consts::SQRT_2),
    0.0,
    0.0,
];
pub const BINARY_VARIANCES: [f64; 4] = [0.0001, 0.04, 0.04, 0.01];

pub const TERNARY_MEANS: [[f64; 4]; 3] = [[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 2.0, 0.0], [0.0, 0.0, 1.0, 1.732_050_807_568_877_2]];
pub const TERNARY_VARIANCES: [f64; 4] = [5.0, 5.0, 1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    BinaryCompositional,
    Ternary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimSpec {
    pub kind: SimKind,
    pub n_per_group: usize,
    pub seed: u64,
    pub replicate: u64,
}

impl SimSpec {
    pub fn new(kind: SimKind, seed: u64, replicate: u64) -> Self {
        Self { kind, n_per_group: 50, seed, replicate }
    }

    fn validate(&self) -> Result<()> {
        if self.n_per_group < 2 {
            return Err(Error::InvalidParameter("n_per_group must be at least 2".into()));
        }
        Ok(())
    }

    fn rng(&self) -> rand_chacha::ChaCha8Rng {
        SeededRng::new(self.seed).derive(self.replicate).stream(0)
    }
}

/// Upper-tail mass of the standard normal beyond a large `a`, asymptotically.
fn tail_mass(a: f64) -> f64 {
    let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
    phi / a * (1.0 - 1.0 / (a * a) + 3.0 / a.powi(4))
}

/// One standard normal draw conditioned on being ≥ `a`.
fn standard_tail<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a <= 0.0 {
        loop {
            let x: f64 = StandardNormal.sample(rng);
            if x >= a {
                return x;
            }
        }
    }
    // Exponential proposal with the optimal rate (Robert, 1995).
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let x = a + exp.sample(rng);
        let u: f64 = rng.random();
        if u <= (-0.5 * (x - rate) * (x - rate)).exp() {
            return x;
        }
    }
}

/// `n` draws from N(mean, diag(variances)) restricted to the nonnegative orthant.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mean: &[f64], variances: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if mean.len() != variances.len() {
        return Err(Error::DimensionMismatch(format!("{} means but {} variances", mean.len(), variances.len())));
    }
    let mut bounds = Vec::with_capacity(mean.len());
    for (&m, &v) in mean.iter().zip(variances) {
        if !(v > 0.0) || !v.is_finite() || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("variance {v} must be positive and finite")));
        }
        let sd = v.sqrt();
        let a = -m / sd;
        if a > MAX_STANDARDIZED_BOUND {
            return Err(Error::TruncationMassTooSmall(tail_mass(a)));
        }
        bounds.push((m, sd, a));
    }
    Ok((0..n).map(|_| bounds.iter().map(|&(m, sd, a)| m + sd * standard_tail(a, rng)).collect()).collect())
}

/// Divides each row by its sum.
pub fn total_sum_scale(sample_ids: Vec<String>, feature_ids: Vec<String>, mut w: Vec<Vec<f64>>) -> Result<AbundanceTable> {
    for (i, row) in w.iter_mut().enumerate() {
        let s: f64 = row.iter().sum();
        if !(s > 0.0) {
            return Err(Error::ZeroRowSum(i));
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    AbundanceTable::compositional(sample_ids, feature_ids, w)
}

fn sample_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (1..=n).map(|i| format!("S{i:0width$}")).collect()
}

fn feature_ids() -> Vec<String> {
    (1..=4).map(|i| format!("F{i}")).collect()
}

pub fn simulate_binary(spec: &SimSpec) -> Result<(AbundanceTable, LabelVector)> {
    spec.validate()?;
    let mut rng = spec.rng();
    let n = spec.n_per_group;
    let plus: Vec<f64> = BINARY_MEAN.iter().zip(BINARY_SHIFT).map(|(m, s)| m + s).collect();
    let minus: Vec<f64> = BINARY_MEAN.iter().zip(BINARY_SHIFT).map(|(m, s)| m - s).collect();
    let mut w = sample_truncated_normal(&plus, &BINARY_VARIANCES, n, &mut rng)?;
    w.extend(sample_truncated_normal(&minus, &BINARY_VARIANCES, n, &mut rng)?);
    let ids = sample_ids(2 * n);
    let labels = LabelVector::new(ids.clone(), (0..2 * n).map(|i| i / n).collect())?;
    Ok((total_sum_scale(ids, feature_ids(), w)?, labels))
}

pub fn simulate_ternary(spec: &SimSpec) -> Result<(AbundanceTable, LabelVector)> {
    spec.validate()?;
    let mut rng = spec.rng();
    let n = spec.n_per_group;
    let sd: Vec<f64> = TERNARY_VARIANCES.iter().map(|v| v.sqrt()).collect();
    let mut x = Vec::with_capacity(3 * n);
    for mean in &TERNARY_MEANS {
        for _ in 0..n {
            x.push(mean.iter().zip(&sd).map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal)).collect());
        }
    }
    let ids = sample_ids(3 * n);
    let labels = LabelVector::new(ids.clone(), (0..3 * n).map(|i| i / n).collect())?;
    Ok((AbundanceTable::signed(ids, feature_ids(), x)?, labels))
}

pub fn simulate(spec: &SimSpec) -> Result<(AbundanceTable, LabelVector)> {
    match spec.kind {
        SimKind::BinaryCompositional => simulate_binary(spec),
        SimKind::Ternary => simulate_ternary(spec),
    }
}
