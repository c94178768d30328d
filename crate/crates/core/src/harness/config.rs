//! Experiment configuration (JSON) and problem construction.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::baseline::RgfParams;
use crate::engine::{AlgoParams, GradientSource, InitRule, Problem};
use crate::graph::{generate_graph, GraphKind, Topology};
use crate::metrics::{self, ValidationReport};
use crate::objectives::{
    self, logreg_objective, quadratic_family, random_quadratic, read_data_csv, synthesize_data, DomainBox,
    LocalObjective, PhaseShift,
};
use crate::szo::NoiseModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Ring { nodes: usize },
    RandomConnected { nodes: usize, extra_edge_prob: f64, seed: u64 },
    Explicit { nodes: usize, edges: Vec<(usize, usize)> },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology, HarnessError> {
        let topo = match self {
            TopologySpec::Ring { nodes } => generate_graph(GraphKind::Ring, *nodes, 0),
            TopologySpec::RandomConnected { nodes, extra_edge_prob, seed } => {
                generate_graph(GraphKind::RandomConnected { extra_edge_prob: *extra_edge_prob }, *nodes, *seed)
            }
            TopologySpec::Explicit { nodes, edges } => Topology::new(*nodes, edges.clone(), 1),
        };
        topo.map_err(|e| HarnessError::field("topology", e))
    }

    pub fn nodes(&self) -> usize {
        match self {
            TopologySpec::Ring { nodes }
            | TopologySpec::RandomConnected { nodes, .. }
            | TopologySpec::Explicit { nodes, .. } => *nodes,
        }
    }
}

fn default_alpha() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    1e-3
}
fn default_batch_rows() -> usize {
    100
}
fn default_dim() -> usize {
    10
}
fn default_flip() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `|cos(x + θᵢ) + |x| + eˣ|` on `[-5, 5]`.
    Toy {
        #[serde(default)]
        phase_shift: PhaseShift,
    },
    /// Sparse-regularized logistic loss on synthetic or CSV data.
    Logreg {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_batch_rows")]
        batch: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default = "default_flip")]
        flip_prob: f64,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
    /// Per-agent random quadratics with eigenvalues in `[eig_lo, eig_hi]`.
    Quadratic { dim: usize, eig_lo: f64, eig_hi: f64, box_halfwidth: f64, seed: u64 },
    /// The same `½xᵀHx + bᵀx` for every agent; `box_halfwidth` absent means
    /// unbounded (only allowed for `H = 0`).
    ExplicitQuadratic {
        h: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        box_halfwidth: Option<f64>,
    },
}

/// A positive number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoValue {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

impl Default for AutoValue {
    fn default() -> Self {
        AutoValue::Keyword(AutoKeyword::Auto)
    }
}

fn default_mu() -> f64 {
    1e-2
}
fn default_batch() -> usize {
    30
}
fn default_iters() -> usize {
    1000
}
fn default_factor() -> f64 {
    1.1
}
fn default_init() -> InitRule {
    InitRule::Uniform { lo: -2.0, hi: 2.0 }
}
fn default_reference_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    #[serde(default)]
    pub rho: AutoValue,
    #[serde(default)]
    pub c: AutoValue,
    /// Multiplier applied to the thresholds when `rho` or `c` is `"auto"`.
    #[serde(default = "default_factor")]
    pub auto_factor: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_iters")]
    pub total_iters: usize,
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitRule,
    #[serde(default)]
    pub gradient: GradientSource,
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Centralized,
    Distributed,
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Centralized]
}
fn default_step_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_step_c")]
    pub step_c: f64,
    /// Defaults to the primal-dual method's `mu`.
    #[serde(default)]
    pub mu: Option<f64>,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec { enabled: false, step_c: default_step_c(), mu: None }
    }
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: TopologySpec,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub noise: NoiseModel,
    pub algorithm: AlgorithmSpec,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub baseline: BaselineSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Worker threads for trials; defaults to the available parallelism.
    #[serde(default)]
    pub threads: Option<usize>,
    pub output_dir: PathBuf,
}

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "ZODUAL_OUTPUT_DIR";

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `output_dir`, unless the environment overrides it.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Field-level checks that do not need the problem built.
    pub fn check(&self) -> Result<(), HarnessError> {
        let a = &self.algorithm;
        let pos = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(HarnessError::field(field, format!("must be positive and finite, got {v}")))
            }
        };
        if self.name.trim().is_empty() {
            return Err(HarnessError::field("name", "must not be empty"));
        }
        if self.trials == 0 {
            return Err(HarnessError::field("trials", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(HarnessError::field("threads", "must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(HarnessError::field("modes", "must list at least one engine mode"));
        }
        pos("algorithm.mu", a.mu)?;
        if a.auto_factor <= 1.0 || !a.auto_factor.is_finite() {
            return Err(HarnessError::field("algorithm.auto_factor", "must exceed 1"));
        }
        if let AutoValue::Value(v) = a.rho {
            pos("algorithm.rho", v)?;
        }
        if let AutoValue::Value(v) = a.c {
            pos("algorithm.c", v)?;
        }
        if a.batch == 0 {
            return Err(HarnessError::field("algorithm.batch", "must be at least 1"));
        }
        if a.total_iters == 0 {
            return Err(HarnessError::field("algorithm.total_iters", "must be at least 1"));
        }
        if a.reference_samples < 2 {
            return Err(HarnessError::field("algorithm.reference_samples", "must be at least 2"));
        }
        match a.init {
            InitRule::Uniform { lo, hi } | InitRule::Consensual { lo, hi }
                if !(lo < hi && lo.is_finite() && hi.is_finite()) =>
            {
                return Err(HarnessError::field("algorithm.init", format!("box [{lo}, {hi}] is empty or infinite")));
            }
            _ => {}
        }
        self.noise.validate().map_err(|e| HarnessError::field("noise", e))?;
        if self.baseline.enabled {
            pos("baseline.step_c", self.baseline.step_c)?;
            if let Some(mu) = self.baseline.mu {
                pos("baseline.mu", mu)?;
            }
        }
        match &self.objective {
            ObjectiveSpec::Logreg { alpha, epsilon, batch, dim, flip_prob, csv, .. } => {
                pos("objective.epsilon", *epsilon)?;
                if !(*alpha >= 0.0) {
                    return Err(HarnessError::field("objective.alpha", "must be nonnegative"));
                }
                if csv.is_none() && (*batch == 0 || *dim == 0) {
                    return Err(HarnessError::field("objective", "batch and dim must be positive"));
                }
                if !(0.0..=1.0).contains(flip_prob) {
                    return Err(HarnessError::field("objective.flip_prob", "must lie in [0, 1]"));
                }
                if let Some(path) = csv {
                    if !path.exists() {
                        return Err(HarnessError::field("objective.csv", format!("{} does not exist", path.display())));
                    }
                }
            }
            ObjectiveSpec::Quadratic { dim, eig_lo, eig_hi, box_halfwidth, .. } => {
                if *dim == 0 {
                    return Err(HarnessError::field("objective.dim", "must be positive"));
                }
                if !(eig_lo <= eig_hi) {
                    return Err(HarnessError::field("objective.eig_lo", "must not exceed eig_hi"));
                }
                pos("objective.box_halfwidth", *box_halfwidth)?;
            }
            ObjectiveSpec::ExplicitQuadratic { h, b, box_halfwidth } => {
                if b.is_empty() || h.len() != b.len() || h.iter().any(|row| row.len() != b.len()) {
                    return Err(HarnessError::field("objective.h", "must be square with the length of b"));
                }
                if let Some(w) = box_halfwidth {
                    pos("objective.box_halfwidth", *w)?;
                }
            }
            ObjectiveSpec::Toy { .. } => {}
        }
        Ok(())
    }
}

/// Built problem plus the resolved algorithm parameters.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: Problem,
    pub params: AlgoParams,
    pub baseline: Option<RgfParams>,
    pub validation: ValidationReport,
}

pub fn build_objectives(spec: &ObjectiveSpec, num_agents: usize) -> Result<Vec<LocalObjective>, HarnessError> {
    let field = |e: objectives::ObjectiveError| HarnessError::field("objective", e);
    match spec {
        ObjectiveSpec::Toy { phase_shift } => Ok(objectives::toy_objectives(num_agents, *phase_shift)),
        ObjectiveSpec::Logreg { alpha, epsilon, batch, dim, data_seed, flip_prob, csv } => {
            let data = match csv {
                Some(path) => read_data_csv(path, num_agents).map_err(field)?,
                None => synthesize_data(num_agents, *batch, *dim, *data_seed, *flip_prob),
            };
            data.iter().map(|d| logreg_objective(d, *alpha, *epsilon, num_agents).map_err(field)).collect()
        }
        ObjectiveSpec::Quadratic { dim, eig_lo, eig_hi, box_halfwidth, seed } => (0..num_agents)
            .map(|i| random_quadratic(*dim, (*eig_lo, *eig_hi), *box_halfwidth, *seed, i).map_err(field))
            .collect(),
        ObjectiveSpec::ExplicitQuadratic { h, b, box_halfwidth } => {
            let m = b.len();
            let hm = DMatrix::from_fn(m, m, |i, j| h[i][j]);
            let domain = match box_halfwidth {
                Some(w) => DomainBox::cube(m, -w, *w).map_err(field)?,
                None => DomainBox::unbounded(m),
            };
            let f = quadratic_family(hm, DVector::from_column_slice(b), domain).map_err(field)?;
            Ok(vec![f; num_agents])
        }
    }
}

pub fn resolve(cfg: &ExperimentConfig) -> Result<Resolved, HarnessError> {
    cfg.check()?;
    let topo = cfg.topology.build()?;
    let objectives = build_objectives(&cfg.objective, topo.num_nodes())?;
    let problem = Problem::new(topo, objectives, cfg.noise).map_err(|e| HarnessError::field("objective", e))?;
    let a = &cfg.algorithm;
    let l0 = problem.lipschitz();
    let mats = &problem.matrices;
    let c = match a.c {
        AutoValue::Value(c) => c,
        AutoValue::Keyword(_) => a.auto_factor * 6.0 * mats.lplus_norm / mats.sigma_min,
    };
    let rho = match a.rho {
        AutoValue::Value(rho) => rho,
        AutoValue::Keyword(_) => {
            let r =
                metrics::validate_params(l0, a.mu, mats, c, 1.0).map_err(|e| HarnessError::field("algorithm", e))?;
            a.auto_factor * r.required_rho
        }
    };
    let params = AlgoParams {
        rho,
        mu: a.mu,
        batch: a.batch,
        total_iters: a.total_iters,
        seed: a.seed,
        init: a.init.clone(),
        c,
        gradient: a.gradient,
        reference_samples: a.reference_samples,
    };
    params.validate().map_err(|e| HarnessError::field("algorithm", e))?;
    let validation = problem.validate(&params).map_err(|e| HarnessError::field("algorithm", e))?;
    let baseline = cfg.baseline.enabled.then(|| RgfParams {
        mu: cfg.baseline.mu.unwrap_or(a.mu),
        step_c: cfg.baseline.step_c,
        total_iters: a.total_iters,
        seed: a.seed,
    });
    Ok(Resolved { problem, params, baseline, validation })
}
