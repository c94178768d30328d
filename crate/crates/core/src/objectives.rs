//! Benchmark local objectives.
//!
//! Three families are provided:
//!
//! * the scalar nonsmooth toy `f(x) = |cos(x + θ) + |x| + exp(x)|` on `[-5, 5]`
//!   (θ = 0 unless per-agent phase perturbation is requested),
//! * mini-batch logistic loss with the `α·log(ε + ‖x‖₁)` sparsity regularizer,
//!   scaled by `1/(N·b)`,
//! * quadratics `½xᵀHx + bᵀx` used as an exactly solvable verification family.
//!
//! Each objective carries a domain box, a Lipschitz constant `L₀` valid on the
//! box and a lower bound. Gaussian smoothing `f_μ(x) = E f(x + μφ)` is exact for
//! the toy and quadratic families. For the logistic family the loss term is a
//! sum of ridge functions, so its smoothing reduces to one-dimensional Gaussian
//! integrals (Gauss–Hermite); only the regularizer is Monte-Carlo estimated.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};
use std::fs::File;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::rng::{self, purpose};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("matrix H is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("alpha must be nonnegative, got {0}")]
    BadAlpha(f64),
    #[error("label {value} at row {row} is not ±1")]
    BadLabel { row: usize, value: f64 },
    #[error("quadratic with nonzero curvature needs a bounded domain box")]
    UnboundedQuadratic,
    #[error("invalid domain box: {0}")]
    BadBox(String),
    #[error("{rows} data rows cannot be split evenly across {agents} agents")]
    UnevenSplit { rows: usize, agents: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(String),
}

/// Per-coordinate interval `[lower_k, upper_k]`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ObjectiveError> {
        if lower.len() != upper.len() {
            return Err(ObjectiveError::Dimension { what: "upper bounds", expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l >= u) {
            return Err(ObjectiveError::BadBox("every lower bound must be below its upper bound".into()));
        }
        Ok(DomainBox { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, ObjectiveError> {
        DomainBox::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn unbounded(dim: usize) -> Self {
        DomainBox { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    /// Largest Euclidean norm of a point in the box.
    pub fn max_norm(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| l.abs().max(u.abs()).powi(2)).sum::<f64>().sqrt()
    }

    /// Clamp `x` into the box in place.
    pub fn project(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Uniform draw; infinite coordinates fall back to `[-1, 1]`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                let (l, u) = if l.is_finite() && u.is_finite() { (l, u) } else { (-1.0, 1.0) };
                rng.gen_range(l..u)
            })
            .collect()
    }
}

/// Labelled data held by one agent: `features` is `b × M`, labels are `±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationData {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl ClassificationData {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self, ObjectiveError> {
        if features.nrows() != labels.len() {
            return Err(ObjectiveError::Dimension { what: "labels", expected: features.nrows(), got: labels.len() });
        }
        if let Some((row, &value)) = labels.iter().enumerate().find(|(_, &y)| y != 1.0 && y != -1.0) {
            return Err(ObjectiveError::BadLabel { row, value });
        }
        Ok(ClassificationData { features, labels })
    }

    pub fn batch_size(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct LogisticLoss {
    features: DMatrix<f64>,
    labels: Vec<f64>,
    row_norms: Vec<f64>,
    alpha: f64,
    epsilon: f64,
    /// `1 / (N b)`
    scale: f64,
}

#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    Toy { phase: f64 },
    Logistic(LogisticLoss),
    Quadratic { h: DMatrix<f64>, b: DVector<f64> },
}

/// A local cost `f_i : ℝ^M → ℝ` with the constants the analysis needs.
#[derive(Debug, Clone)]
pub struct LocalObjective {
    dim: usize,
    domain: DomainBox,
    lipschitz: f64,
    lower_bound: f64,
    kind: ObjectiveKind,
}

/// Smoothed value and gradient with Monte-Carlo standard errors (zero when
/// computed exactly).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedEval {
    pub value: f64,
    pub value_se: f64,
    pub gradient: Vec<f64>,
    pub gradient_se: Vec<f64>,
}

impl LocalObjective {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    /// `L₀` on the domain box.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Noise-free value. Callers are responsible for the domain check.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            ObjectiveKind::Toy { phase } => toy_value(x[0], *phase),
            ObjectiveKind::Logistic(l) => l.value(x),
            ObjectiveKind::Quadratic { h, b } => {
                let x = DVector::from_column_slice(x);
                0.5 * x.dot(&(h * &x)) + b.dot(&x)
            }
        }
    }

    /// Whether `∇f_μ` and `f_μ` are available without sampling.
    pub fn has_closed_form_smoothing(&self) -> bool {
        !matches!(self.kind, ObjectiveKind::Logistic(_))
    }

    /// Exact `∇f_μ(x)` when available.
    pub fn smoothed_gradient_exact(&self, x: &[f64], mu: f64) -> Option<Vec<f64>> {
        match &self.kind {
            ObjectiveKind::Toy { phase } => Some(vec![toy_smoothed_derivative(x[0], *phase, mu)]),
            ObjectiveKind::Quadratic { h, b } => {
                let x = DVector::from_column_slice(x);
                Some((h * x + b).as_slice().to_vec())
            }
            ObjectiveKind::Logistic(_) => None,
        }
    }

    /// Exact `f_μ(x)` when available.
    pub fn smoothed_value_exact(&self, x: &[f64], mu: f64) -> Option<f64> {
        match &self.kind {
            ObjectiveKind::Toy { phase } => Some(toy_smoothed_value(x[0], *phase, mu)),
            ObjectiveKind::Quadratic { h, .. } => Some(self.value(x) + 0.5 * mu * mu * h.trace()),
            ObjectiveKind::Logistic(_) => None,
        }
    }

    /// `f_μ` and `∇f_μ` at `x`, drawing at most `samples` Gaussian vectors from
    /// `rng` for the parts without a closed form.
    pub fn smoothed<R: Rng>(&self, x: &[f64], mu: f64, samples: usize, rng: &mut R) -> SmoothedEval {
        match &self.kind {
            ObjectiveKind::Logistic(l) => l.smoothed(x, mu, samples, rng),
            _ => SmoothedEval {
                value: self.smoothed_value_exact(x, mu).expect("closed form"),
                value_se: 0.0,
                gradient: self.smoothed_gradient_exact(x, mu).expect("closed form"),
                gradient_se: vec![0.0; self.dim],
            },
        }
    }
}

// ---------------------------------------------------------------------------
// toy

/// `L₀` of the toy on `[-5, 5]`: `|d/dx| ≤ |sin| + 1 + e⁵`.
pub const TOY_LIPSCHITZ: f64 = 2.0 + 148.413_159_102_576_6;
pub const TOY_BOX: (f64, f64) = (-5.0, 5.0);

fn toy_value(x: f64, phase: f64) -> f64 {
    ((x + phase).cos() + x.abs() + x.exp()).abs()
}

// The inner expression cos(x+θ) + |x| + eˣ is nonnegative for every real x
// (x ≥ 0: x + eˣ ≥ 1 + 2x ≥ 1; x < 0: -x + eˣ ≥ 1), so the outer absolute value
// is inactive and the smoothing splits term by term.
fn toy_smoothed_value(x: f64, phase: f64, mu: f64) -> f64 {
    let folded = mu * FRAC_2_SQRT_PI / SQRT_2 * (-x * x / (2.0 * mu * mu)).exp() + x * erf(x / (mu * SQRT_2));
    (-0.5 * mu * mu).exp() * (x + phase).cos() + folded + (x + 0.5 * mu * mu).exp()
}

fn toy_smoothed_derivative(x: f64, phase: f64, mu: f64) -> f64 {
    -(-0.5 * mu * mu).exp() * (x + phase).sin() + erf(x / (mu * SQRT_2)) + (x + 0.5 * mu * mu).exp()
}

/// `f(x) = |cos(x) + |x| + exp(x)|`, `M = 1`, domain `[-5, 5]`.
pub fn toy_objective() -> LocalObjective {
    toy_objective_with_phase(0.0)
}

/// Toy with `cos(x + phase)`, used to make per-agent copies differ.
pub fn toy_objective_with_phase(phase: f64) -> LocalObjective {
    LocalObjective {
        dim: 1,
        domain: DomainBox::cube(1, TOY_BOX.0, TOY_BOX.1).expect("valid box"),
        lipschitz: TOY_LIPSCHITZ,
        lower_bound: 0.0,
        kind: ObjectiveKind::Toy { phase },
    }
}

// ---------------------------------------------------------------------------
// logistic regression with log-ℓ1 regularizer

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-t))` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

const HERMITE_NODES: usize = 24;

/// Nodes and weights with `Σ wₖ g(tₖ) ≈ E g(z)`, `z ~ N(0, 1)` (Golub–Welsch on
/// the probabilists' Hermite recurrence).
fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = HERMITE_NODES;
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

impl LogisticLoss {
    fn l1(x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let margins = &self.features * &x;
        let loss: f64 = margins.iter().zip(&self.labels).map(|(m, y)| softplus(-y * m)).sum();
        self.scale * (loss + self.alpha * (self.epsilon + Self::l1(x.as_slice())).ln())
    }

    fn smoothed<R: Rng>(&self, x: &[f64], mu: f64, samples: usize, rng: &mut R) -> SmoothedEval {
        let dim = x.len();
        let (nodes, weights) = hermite_rule();
        let xv = DVector::from_column_slice(x);
        let margins = &self.features * &xv;

        // y vᵀ(x + μφ) ~ m + μ‖v‖ z in distribution, and z is symmetric.
        let mut value = 0.0;
        let mut coeffs = DVector::zeros(self.labels.len());
        for (j, (&m, &y)) in margins.iter().zip(&self.labels).enumerate() {
            let margin = y * m;
            let spread = mu * self.row_norms[j];
            let mut v = 0.0;
            let mut d = 0.0;
            for (&t, &w) in nodes.iter().zip(weights.iter()) {
                let s = margin + spread * t;
                v += w * softplus(-s);
                d -= w * sigmoid(-s);
            }
            value += v;
            coeffs[j] = d * y;
        }
        let loss_grad = self.features.transpose() * coeffs;

        let c = self.scale * self.alpha;
        let mut gradient: Vec<f64> = loss_grad.iter().map(|g| self.scale * g).collect();
        let mut gradient_se = vec![0.0; dim];
        let (mut reg_mean, mut reg_se) = (0.0, 0.0);
        if self.alpha > 0.0 {
            let samples = samples.max(2);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut grad_sum = vec![0.0; dim];
            let mut grad_sq = vec![0.0; dim];
            let mut point = vec![0.0; dim];
            for _ in 0..samples {
                for (p, xi) in point.iter_mut().zip(x) {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = xi + mu * z;
                }
                let norm = self.epsilon + Self::l1(&point);
                let h = norm.ln();
                sum += h;
                sum_sq += h * h;
                // ∇ log(ε + ‖y‖₁) = sign(y) / (ε + ‖y‖₁) almost everywhere
                for k in 0..dim {
                    let g = point[k].signum() / norm;
                    grad_sum[k] += g;
                    grad_sq[k] += g * g;
                }
            }
            (reg_mean, reg_se) = mean_and_se(sum, sum_sq, samples);
            for k in 0..dim {
                let (g, se) = mean_and_se(grad_sum[k], grad_sq[k], samples);
                gradient[k] += c * g;
                gradient_se[k] = c * se;
            }
        }
        SmoothedEval { value: self.scale * value + c * reg_mean, value_se: c * reg_se, gradient, gradient_se }
    }
}

fn mean_and_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Local logistic objective `(1/(N b))[Σⱼ log(1 + exp(−yⱼ xᵀvⱼ)) + α log(ε + ‖x‖₁)]`.
pub fn logreg_objective(
    data: &ClassificationData,
    alpha: f64,
    epsilon: f64,
    num_agents: usize,
) -> Result<LocalObjective, ObjectiveError> {
    if !(epsilon > 0.0) {
        return Err(ObjectiveError::BadEpsilon(epsilon));
    }
    if !(alpha >= 0.0) {
        return Err(ObjectiveError::BadAlpha(alpha));
    }
    let b = data.batch_size();
    let dim = data.dim();
    let scale = 1.0 / (num_agents as f64 * b as f64);
    let row_norms: Vec<f64> = data.features.row_iter().map(|r| r.norm()).collect();
    // |∂/∂x log(1+e^{-y xᵀv})| ≤ ‖v‖ and |∂ log(ε+‖x‖₁)| ≤ √M/ε
    let lipschitz = scale * (row_norms.iter().sum::<f64>() + alpha * (dim as f64).sqrt() / epsilon);
    let lower_bound = scale * alpha * epsilon.ln().min(0.0);
    Ok(LocalObjective {
        dim,
        domain: DomainBox::unbounded(dim),
        lipschitz,
        lower_bound,
        kind: ObjectiveKind::Logistic(LogisticLoss {
            features: data.features.clone(),
            labels: data.labels.clone(),
            row_norms,
            alpha,
            epsilon,
            scale,
        }),
    })
}

/// Gaussian features, labels from a planted vector with `⌈M/4⌉` nonzeros,
/// each label flipped independently with probability `flip_prob`.
pub fn synthesize_data(
    num_agents: usize,
    batch: usize,
    dim: usize,
    seed: u64,
    flip_prob: f64,
) -> Vec<ClassificationData> {
    let mut rng = rng::stream(seed, &[purpose::DATA]);
    let support = dim.div_ceil(4);
    let mut idx: Vec<usize> = (0..dim).collect();
    for k in 0..support {
        let pick = rng.gen_range(k..dim);
        idx.swap(k, pick);
    }
    let mut planted = DVector::zeros(dim);
    for &k in &idx[..support] {
        planted[k] = rng.sample::<f64, _>(StandardNormal);
    }
    (0..num_agents)
        .map(|agent| {
            let mut rng = rng::stream(seed, &[purpose::DATA, agent as u64 + 1]);
            let features = DMatrix::from_fn(batch, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let labels = (0..batch)
                .map(|j| {
                    let y = if features.row(j).dot(&planted.transpose()) >= 0.0 { 1.0 } else { -1.0 };
                    if rng.gen::<f64>() < flip_prob {
                        -y
                    } else {
                        y
                    }
                })
                .collect();
            ClassificationData { features, labels }
        })
        .collect()
}

/// Write all agents' data to one headerless CSV: `label, v₁, …, v_M` per row,
/// agents in order.
pub fn write_data_csv(path: &Path, data: &[ClassificationData]) -> Result<(), ObjectiveError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for block in data {
        for (j, y) in block.labels.iter().enumerate() {
            let mut row = vec![format!("{y}")];
            row.extend(block.features.row(j).iter().map(|v| format!("{v:.17e}")));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a CSV written by [`write_data_csv`] (or any file of the same shape) and
/// split its rows evenly across `num_agents`.
pub fn read_data_csv(path: &Path, num_agents: usize) -> Result<Vec<ClassificationData>, ObjectiveError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| ObjectiveError::Parse(format!("row {r}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() < 2 {
            return Err(ObjectiveError::Parse(format!("row {r}: need a label and at least one feature")));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(ObjectiveError::Dimension { what: "csv row", expected: first.len(), got: row.len() });
            }
        }
        rows.push(row);
    }
    if num_agents == 0 || rows.is_empty() || rows.len() % num_agents != 0 {
        return Err(ObjectiveError::UnevenSplit { rows: rows.len(), agents: num_agents });
    }
    let batch = rows.len() / num_agents;
    let dim = rows[0].len() - 1;
    rows.chunks(batch)
        .map(|chunk| {
            let labels = chunk.iter().map(|r| r[0]).collect();
            let features = DMatrix::from_fn(batch, dim, |j, k| chunk[j][k + 1]);
            ClassificationData::new(features, labels)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// quadratic verification family

/// `f(x) = ½xᵀHx + bᵀx` with `∇f_μ = Hx + b` and `f_μ = f + μ²·tr(H)/2`.
pub fn quadratic_family(h: DMatrix<f64>, b: DVector<f64>, domain: DomainBox) -> Result<LocalObjective, ObjectiveError> {
    let dim = b.len();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(ObjectiveError::Dimension { what: "H", expected: dim, got: h.nrows().max(h.ncols()) });
    }
    if domain.dim() != dim {
        return Err(ObjectiveError::Dimension { what: "domain box", expected: dim, got: domain.dim() });
    }
    let asym = (&h - h.transpose()).amax();
    if asym > 1e-12 * (1.0 + h.amax()) {
        return Err(ObjectiveError::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    let h_norm = eig.amax();
    let lambda_min = eig.min();
    let curved = h_norm > 0.0;
    if curved && !domain.is_bounded() {
        return Err(ObjectiveError::UnboundedQuadratic);
    }
    let radius = if domain.is_bounded() { domain.max_norm() } else { 0.0 };
    let lipschitz = h_norm * radius + b.norm();
    let lower_bound = if lambda_min > 1e-12 * h_norm.max(1.0) {
        let solve = h.clone().cholesky().expect("positive definite").solve(&b);
        -0.5 * b.dot(&solve)
    } else if domain.is_bounded() {
        0.5 * lambda_min.min(0.0) * radius * radius - b.norm() * radius
    } else if b.norm() == 0.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(LocalObjective { dim, domain, lipschitz, lower_bound, kind: ObjectiveKind::Quadratic { h, b } })
}

/// Random symmetric `H` with eigenvalues uniform in `[lo, hi]` and `b ~ N(0, I)`.
pub fn random_quadratic(
    dim: usize,
    eig_range: (f64, f64),
    box_halfwidth: f64,
    seed: u64,
    agent: usize,
) -> Result<LocalObjective, ObjectiveError> {
    let mut rng = rng::stream(seed, &[purpose::OBJECTIVE, agent as u64]);
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let eigs = DVector::from_fn(dim, |_, _| rng.gen_range(eig_range.0..=eig_range.1));
    let mut h = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    h = (&h + h.transpose()) * 0.5;
    let b = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    quadratic_family(h, b, DomainBox::cube(dim, -box_halfwidth, box_halfwidth)?)
}

// ---------------------------------------------------------------------------
// global helpers over stacked vectors

/// `Σᵢ fᵢ(xᵢ)` over the blocks of a stacked vector.
pub fn global_value(objectives: &[LocalObjective], x: &[f64]) -> f64 {
    let mut offset = 0;
    let mut total = 0.0;
    for f in objectives {
        total += f.value(&x[offset..offset + f.dim()]);
        offset += f.dim();
    }
    total
}

/// Lipschitz constant of the separable sum in the Euclidean norm:
/// `Σ Lᵢ|dᵢ| ≤ (Σ Lᵢ²)^{1/2} ‖d‖`.
pub fn global_lipschitz(objectives: &[LocalObjective]) -> f64 {
    objectives.iter().map(|f| f.lipschitz.powi(2)).sum::<f64>().sqrt()
}

pub fn global_lower_bound(objectives: &[LocalObjective]) -> f64 {
    objectives.iter().map(|f| f.lower_bound).sum()
}

/// Largest difference quotient `|f(x) − f(y)| / ‖x − y‖` over random pairs of
/// the domain box (infinite sides sampled from `[-1, 1]`).
pub fn sampled_lipschitz<R: Rng>(f: &LocalObjective, pairs: usize, rng: &mut R) -> f64 {
    let mut best = 0.0_f64;
    for _ in 0..pairs {
        let x = f.domain.sample(rng);
        let y = f.domain.sample(rng);
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist > 0.0 {
            best = best.max((f.value(&x) - f.value(&y)).abs() / dist);
        }
    }
    best
}

/// Options shared by config files for the per-agent toy copies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseShift {
    pub enabled: bool,
    pub seed: u64,
}

/// One toy objective per agent, optionally with a random phase in `[-π, π)`.
pub fn toy_objectives(num_agents: usize, shift: PhaseShift) -> Vec<LocalObjective> {
    (0..num_agents)
        .map(|i| {
            if shift.enabled {
                let mut rng = rng::stream(shift.seed, &[purpose::OBJECTIVE, i as u64]);
                toy_objective_with_phase(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            } else {
                toy_objective()
            }
        })
        .collect()
}
