//! Diagnostics from the convergence analysis: stationarity gap, constraint
//! violation, the potential function and its constants, the parameter
//! validator and the `γ₁/T + const` rate fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NetworkMatrices;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("rate fit needs at least 3 distinct horizons, got {0}")]
    TooFewPoints(usize),
    #[error("rate fit data must be finite")]
    NonFinite,
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
}

fn positive(name: &'static str, value: f64) -> Result<f64, MetricsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(MetricsError::NotPositive { name, value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64, MetricsError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(MetricsError::Negative { name, value })
    }
}

/// Constants entering the potential function and its descent estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConstants {
    pub l0: f64,
    pub mu: f64,
    pub q: usize,
    /// `L₁ = 2 L₀ √Q / μ`
    pub l1: f64,
    pub sigma_min: f64,
    pub lplus_norm: f64,
    pub c: f64,
    pub rho: f64,
    /// `k = 2(6L₁²/(ρσ_min) + 3cL₁/2)`
    pub k: f64,
}

impl AnalysisConstants {
    pub fn new(l0: f64, mu: f64, mats: &NetworkMatrices, c: f64, rho: f64) -> Result<Self, MetricsError> {
        let l0 = nonnegative("L0", l0)?;
        let mu = positive("mu", mu)?;
        let c = positive("c", c)?;
        let rho = positive("rho", rho)?;
        let sigma_min = positive("sigma_min", mats.sigma_min)?;
        let q = mats.dim();
        let l1 = 2.0 * l0 * (q as f64).sqrt() / mu;
        let k = 2.0 * (6.0 * l1 * l1 / (rho * sigma_min) + 1.5 * c * l1);
        Ok(AnalysisConstants { l0, mu, q, l1, sigma_min, lplus_norm: mats.lplus_norm, c, rho, k })
    }

    /// `B = L⁺ + k/(cρ) I`
    pub fn b_matrix(&self, mats: &NetworkMatrices) -> DMatrix<f64> {
        let mut b = mats.signless_laplacian.clone();
        let shift = self.k / (self.c * self.rho);
        for i in 0..b.nrows() {
            b[(i, i)] += shift;
        }
        b
    }
}

/// Per-iteration diagnostics. `wall_time` is seconds since the run started and
/// is kept out of persisted CSVs so reruns are byte-identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub iter: usize,
    pub stationarity_gap: f64,
    pub constraint_violation: f64,
    pub potential: f64,
    pub objective: f64,
    /// Standard error of the gap from Monte-Carlo parts of `∇f_μ` (0 when exact).
    pub gap_std_err: f64,
    pub wall_time: f64,
}

fn dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// `‖Ax‖`
pub fn constraint_violation(x: &[f64], mats: &NetworkMatrices) -> f64 {
    (&mats.incidence * dvec(x)).norm()
}

/// `Φ_μ(x, λ) = ‖∇f_μ(x) + Aᵀλ + ρAᵀAx‖² + ‖Ax‖²`, evaluated with the dual
/// iterate that preceded `x`.
pub fn stationarity_gap(x: &[f64], lambda_prev: &[f64], mats: &NetworkMatrices, rho: f64, grad_f_mu: &[f64]) -> f64 {
    let xv = dvec(x);
    let ax = &mats.incidence * &xv;
    let grad = dvec(grad_f_mu) + mats.incidence.tr_mul(&dvec(lambda_prev)) + mats.incidence.tr_mul(&ax) * rho;
    grad.norm_squared() + ax.norm_squared()
}

/// First-order propagation of per-coordinate standard errors of `∇f_μ` into
/// the gap: `2‖r ⊙ se‖`, `r` the stationarity residual.
pub fn gap_std_err(
    x: &[f64],
    lambda_prev: &[f64],
    mats: &NetworkMatrices,
    rho: f64,
    grad: &[f64],
    grad_se: &[f64],
) -> f64 {
    if grad_se.iter().all(|s| *s == 0.0) {
        return 0.0;
    }
    let ax = &mats.incidence * dvec(x);
    let residual = dvec(grad) + mats.incidence.tr_mul(&dvec(lambda_prev)) + mats.incidence.tr_mul(&ax) * rho;
    2.0 * residual.iter().zip(grad_se).map(|(r, s)| (r * s).powi(2)).sum::<f64>().sqrt()
}

/// `U_{ρ,μ}(x, λ) = f_μ(x) + ⟨λ, Ax⟩ + (ρ/2)‖Ax‖²`
pub fn augmented_lagrangian(f_mu: f64, x: &[f64], lambda: &[f64], mats: &NetworkMatrices, rho: f64) -> f64 {
    let ax = &mats.incidence * dvec(x);
    f_mu + dvec(lambda).dot(&ax) + 0.5 * rho * ax.norm_squared()
}

/// `P = U_{ρ,μ}(x, λ) + c·(ρ/2)(‖Ax‖² + ‖x − x_prev‖²_B)`
pub fn potential(
    x: &[f64],
    x_prev: &[f64],
    lambda: &[f64],
    mats: &NetworkMatrices,
    consts: &AnalysisConstants,
    f_mu: f64,
) -> f64 {
    let rho = consts.rho;
    let ax = &mats.incidence * dvec(x);
    let u = f_mu + dvec(lambda).dot(&ax) + 0.5 * rho * ax.norm_squared();
    let dx = dvec(x) - dvec(x_prev);
    let shift = consts.k / (consts.c * rho);
    let b_norm = dx.dot(&(&mats.signless_laplacian * &dx)) + shift * dx.norm_squared();
    u + consts.c * 0.5 * rho * (ax.norm_squared() + b_norm)
}

/// `P̲ = −L₀(Q+4)²/(σ_min J²) + f̲`
pub fn potential_lower_bound(l0: f64, q: usize, sigma_min: f64, batch: usize, f_lower: f64) -> f64 {
    let j = batch as f64;
    -l0 * (q as f64 + 4.0).powi(2) / (sigma_min * j * j) + f_lower
}

/// Thresholds of the sufficient conditions on `(c, ρ)` and the descent
/// constants evaluated at the supplied pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub c_ok: bool,
    pub rho_ok: bool,
    pub c: f64,
    pub rho: f64,
    /// `6‖L⁺‖/σ_min`
    pub required_c: f64,
    /// `b + √(b² + 6L₁²/σ_min)`
    pub required_rho: f64,
    /// `b = cL₁ + L₁/4 + L₁²/4 + 1/4`
    pub b: f64,
    pub l0: f64,
    pub l1: f64,
    pub k: f64,
    pub sigma_min: f64,
    pub lplus_norm: f64,
    pub alpha1: f64,
    /// `3ρ‖L⁺‖/σ_min − cρ/2` exactly as stated.
    pub alpha2_as_stated: f64,
    /// `cρ/2 − 3ρ‖L⁺‖/σ_min`, the sign that makes `−α₂‖w‖²` a decrease when
    /// `c` exceeds its threshold.
    pub alpha2_descent: f64,
    pub alpha3: f64,
}

pub fn validate_params(
    l0: f64,
    mu: f64,
    mats: &NetworkMatrices,
    c: f64,
    rho: f64,
) -> Result<ValidationReport, MetricsError> {
    let k = AnalysisConstants::new(l0, mu, mats, c, rho)?;
    let (l1, s, lp) = (k.l1, k.sigma_min, k.lplus_norm);
    let required_c = 6.0 * lp / s;
    let b = c * l1 + l1 / 4.0 + l1 * l1 / 4.0 + 0.25;
    let required_rho = b + (b * b + 6.0 * l1 * l1 / s).sqrt();
    let c_ok = c > required_c;
    let rho_ok = rho > required_rho;
    let alpha1 = rho * rho - (2.0 * c * l1 + l1 / 2.0 + l1 * l1 / 2.0 + 0.5) * rho - 6.0 * l1 * l1 / s;
    let alpha2_as_stated = 3.0 * rho * lp / s - c * rho / 2.0;
    let alpha3 = 9.0 / (rho * s) + if l1 > 0.0 { (6.0 * c + 1.0) / l1 } else { f64::INFINITY };
    Ok(ValidationReport {
        valid: c_ok && rho_ok,
        c_ok,
        rho_ok,
        c,
        rho,
        required_c,
        required_rho,
        b,
        l0: k.l0,
        l1,
        k: k.k,
        sigma_min: s,
        lplus_norm: lp,
        alpha1,
        alpha2_as_stated,
        alpha2_descent: -alpha2_as_stated,
        alpha3,
    })
}

/// Smallest `c` and `ρ` strictly satisfying the sufficient conditions, scaled
/// by `factor` (> 1).
pub fn scaled_thresholds(l0: f64, mu: f64, mats: &NetworkMatrices, factor: f64) -> Result<(f64, f64), MetricsError> {
    positive("factor", factor)?;
    let c = factor * 6.0 * mats.lplus_norm / positive("sigma_min", mats.sigma_min)?;
    let report = validate_params(l0, mu, mats, c, 1.0)?;
    Ok((c, factor * report.required_rho))
}

/// Least-squares fit of `gap ≈ γ₁/T + const`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub gamma1_hat: f64,
    pub const_hat: f64,
    /// `‖residual‖ / ‖data‖`
    pub relative_residual: f64,
    pub horizons: Vec<usize>,
    pub mean_gaps: Vec<f64>,
    pub fitted: Vec<f64>,
}

pub fn rate_fit(points: &[(usize, f64)]) -> Result<RateFit, MetricsError> {
    let mut horizons: Vec<usize> = points.iter().map(|p| p.0).collect();
    horizons.sort_unstable();
    horizons.dedup();
    if horizons.len() < 3 || horizons.len() != points.len() || horizons[0] == 0 {
        return Err(MetricsError::TooFewPoints(horizons.iter().filter(|t| **t > 0).count()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n = points.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 / points[i].0 as f64 } else { 1.0 });
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let coef = design.clone().svd(true, true).solve(&y, 1e-14).expect("svd with both factors");
    let fitted = &design * &coef;
    let data_norm = y.norm();
    let resid = (&y - &fitted).norm();
    Ok(RateFit {
        gamma1_hat: coef[0],
        const_hat: coef[1],
        relative_residual: if data_norm > 0.0 { resid / data_norm } else { resid },
        horizons: points.iter().map(|p| p.0).collect(),
        mean_gaps: points.iter().map(|p| p.1).collect(),
        fitted: fitted.iter().copied().collect(),
    })
}
