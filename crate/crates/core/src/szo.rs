//! Stochastic zeroth-order oracle and Gaussian-smoothing gradient estimators.
//!
//! An oracle answers `H(x, ξ) = f(x) + ξ` for a local objective `f`. The
//! two-point estimator
//!
//! ```text
//! G(x, φ, ξ) = [H(x + μφ, ξ) − H(x, ξ)] / μ · φ,   φ ~ N(0, I_M)
//! ```
//!
//! is unbiased for `∇f_μ(x)`, and its batch average over `J` independent
//! samples is the quantity the primal step consumes.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::LocalObjective;

/// Maximum number of direction redraws when `x + μφ` leaves the domain box.
pub const MAX_RETRIES: usize = 100;

/// Monte-Carlo budget for reference quantities without a closed form.
pub const REFERENCE_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("point has dimension {got}, objective expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("query point lies outside the objective's domain box")]
    OutsideDomain,
    #[error("perturbed point left the domain box {retries} times in a row")]
    EscapeRetries { retries: usize },
    #[error("smoothing parameter mu must be positive and finite, got {0}")]
    BadMu(f64),
    #[error("batch size must be at least 1")]
    BadBatch,
    #[error("noise standard deviation must be nonnegative and finite, got {0}")]
    BadNoise(f64),
    #[error("{0} must be at least {1}")]
    TooFewSamples(&'static str, usize),
}

/// Distribution of `ξ` in `H(x, ξ) = f(x) + ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    AdditiveGaussian {
        std_dev: f64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), OracleError> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::AdditiveGaussian { std_dev } if std_dev >= 0.0 && std_dev.is_finite() => Ok(()),
            NoiseModel::AdditiveGaussian { std_dev } => Err(OracleError::BadNoise(std_dev)),
        }
    }

    /// One draw of `ξ`. Consumes no randomness for [`NoiseModel::None`].
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::AdditiveGaussian { std_dev } => {
                Normal::new(0.0, std_dev).expect("validated std_dev").sample(rng)
            }
        }
    }
}

/// Smoothing radius `μ` and batch size `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub mu: f64,
    pub batch: usize,
}

impl SmoothingParams {
    pub fn new(mu: f64, batch: usize) -> Result<Self, OracleError> {
        let p = SmoothingParams { mu, batch };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(OracleError::BadMu(self.mu));
        }
        if self.batch == 0 {
            return Err(OracleError::BadBatch);
        }
        Ok(())
    }
}

/// A local objective behind a noisy function-value interface.
#[derive(Debug, Clone, Copy)]
pub struct Oracle<'a> {
    pub objective: &'a LocalObjective,
    pub noise: NoiseModel,
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_err: T,
}

impl<'a> Oracle<'a> {
    pub fn new(objective: &'a LocalObjective, noise: NoiseModel) -> Self {
        Oracle { objective, noise }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn check_point(&self, x: &[f64]) -> Result<(), OracleError> {
        if x.len() != self.dim() {
            return Err(OracleError::Dimension { expected: self.dim(), got: x.len() });
        }
        if !self.objective.domain().contains(x) {
            return Err(OracleError::OutsideDomain);
        }
        Ok(())
    }

    /// One noisy evaluation `f(x) + ξ`.
    pub fn query<R: Rng>(&self, x: &[f64], rng: &mut R) -> Result<f64, OracleError> {
        self.check_point(x)?;
        Ok(self.objective.value(x) + self.noise.draw(rng))
    }

    /// Draw `φ` until `x + μφ` is in the box; returns `(φ, x + μφ)`.
    fn perturb<R: Rng>(&self, x: &[f64], mu: f64, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
        let domain = self.objective.domain();
        let mut phi = vec![0.0; x.len()];
        let mut point = vec![0.0; x.len()];
        for _ in 0..MAX_RETRIES {
            for ((p, f), xi) in point.iter_mut().zip(phi.iter_mut()).zip(x) {
                *f = rng.sample(StandardNormal);
                *p = xi + mu * *f;
            }
            if domain.contains(&point) {
                return Ok((phi, point));
            }
        }
        Err(OracleError::EscapeRetries { retries: MAX_RETRIES })
    }

    /// Single-sample estimate: two queries sharing one noise draw.
    pub fn single_estimate<R: Rng>(&self, x: &[f64], mu: f64, rng: &mut R) -> Result<Vec<f64>, OracleError> {
        self.check_point(x)?;
        let (phi, point) = self.perturb(x, mu, rng)?;
        let xi = self.noise.draw(rng);
        let forward = self.objective.value(&point) + xi;
        let base = self.objective.value(x) + xi;
        let scale = (forward - base) / mu;
        Ok(phi.into_iter().map(|p| scale * p).collect())
    }

    /// Batch estimate `(1/J) Σⱼ G(x, φⱼ, ξⱼ)`, samples drawn sequentially from `rng`.
    pub fn estimate_gradient<R: Rng>(
        &self,
        x: &[f64],
        params: SmoothingParams,
        rng: &mut R,
    ) -> Result<Vec<f64>, OracleError> {
        params.validate()?;
        let mut sum = vec![0.0; x.len()];
        for _ in 0..params.batch {
            let g = self.single_estimate(x, params.mu, rng)?;
            for (s, v) in sum.iter_mut().zip(&g) {
                *s += v;
            }
        }
        let j = params.batch as f64;
        Ok(sum.into_iter().map(|s| s / j).collect())
    }

    /// Monte-Carlo estimate of `f_μ(x) = E f(x + μφ)` (noise-free values).
    pub fn smoothed_value<R: Rng>(
        &self,
        x: &[f64],
        mu: f64,
        mc_samples: usize,
        rng: &mut R,
    ) -> Result<Estimate<f64>, OracleError> {
        if mc_samples == 0 {
            return Err(OracleError::TooFewSamples("mc_samples", 1));
        }
        self.check_point(x)?;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..mc_samples {
            let (_, point) = self.perturb(x, mu, rng)?;
            let v = self.objective.value(&point);
            sum += v;
            sum_sq += v * v;
        }
        let (mean, std_err) = mean_se(sum, sum_sq, mc_samples);
        Ok(Estimate { mean, std_err })
    }
}

fn mean_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Plain Monte-Carlo evaluation of `∇f_μ(x) = E[(f(x + μφ) − f(x))/μ · φ]`
/// with per-coordinate standard errors.
pub fn mc_smoothed_gradient<R: Rng>(
    objective: &LocalObjective,
    x: &[f64],
    mu: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate<Vec<f64>>, OracleError> {
    if samples < 2 {
        return Err(OracleError::TooFewSamples("samples", 2));
    }
    let oracle = Oracle::new(objective, NoiseModel::None);
    let dim = x.len();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for _ in 0..samples {
        let g = oracle.single_estimate(x, mu, rng)?;
        for k in 0..dim {
            sum[k] += g[k];
            sum_sq[k] += g[k] * g[k];
        }
    }
    let (mean, std_err) = (0..dim).map(|k| mean_se(sum[k], sum_sq[k], samples)).unzip();
    Ok(Estimate { mean, std_err })
}

/// Reference `∇f_μ(x)`: exact where the objective has a closed form (zero
/// standard error), otherwise the objective's own semi-analytic estimator with
/// `mc_samples` draws.
pub fn smoothed_gradient_reference<R: Rng>(
    objective: &LocalObjective,
    x: &[f64],
    mu: f64,
    mc_samples: usize,
    rng: &mut R,
) -> Estimate<Vec<f64>> {
    match objective.smoothed_gradient_exact(x, mu) {
        Some(g) => Estimate { std_err: vec![0.0; g.len()], mean: g },
        None => {
            let s = objective.smoothed(x, mu, mc_samples, rng);
            Estimate { mean: s.gradient, std_err: s.gradient_se }
        }
    }
}

/// Empirical second moments of the batch estimator at a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormDiagnostic {
    /// `E‖Ḡ‖²`
    pub mean_sq_norm: f64,
    pub mean_sq_norm_se: f64,
    /// `E‖Ḡ − ∇f_μ(x)‖²`
    pub mean_sq_deviation: f64,
    pub mean_sq_deviation_se: f64,
    /// `L₀²(M+4)²/J²`, reported for comparison only.
    pub reported_bound: f64,
}

pub fn estimator_norm_diagnostic<R: Rng>(
    oracle: &Oracle<'_>,
    x: &[f64],
    params: SmoothingParams,
    replicates: usize,
    rng: &mut R,
) -> Result<NormDiagnostic, OracleError> {
    if replicates < 100 {
        return Err(OracleError::TooFewSamples("replicates", 100));
    }
    params.validate()?;
    let reference = smoothed_gradient_reference(oracle.objective, x, params.mu, REFERENCE_MC_SAMPLES, rng).mean;
    let (mut n_sum, mut n_sq, mut d_sum, mut d_sq) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..replicates {
        let g = oracle.estimate_gradient(x, params, rng)?;
        let norm: f64 = g.iter().map(|v| v * v).sum();
        let dev: f64 = g.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum();
        n_sum += norm;
        n_sq += norm * norm;
        d_sum += dev;
        d_sq += dev * dev;
    }
    let (mean_sq_norm, mean_sq_norm_se) = mean_se(n_sum, n_sq, replicates);
    let (mean_sq_deviation, mean_sq_deviation_se) = mean_se(d_sum, d_sq, replicates);
    let l0 = oracle.objective.lipschitz();
    let q = oracle.dim() as f64;
    let j = params.batch as f64;
    Ok(NormDiagnostic {
        mean_sq_norm,
        mean_sq_norm_se,
        mean_sq_deviation,
        mean_sq_deviation_se,
        reported_bound: (l0 * (q + 4.0) / j).powi(2),
    })
}
