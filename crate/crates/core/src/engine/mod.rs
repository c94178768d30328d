//! The primal-dual iteration on the edge-consensus reformulation.
//!
//! With incidence `A`, degree `D` and signless Laplacian `L⁺ = 2D − AᵀA`, one
//! iteration is
//!
//! ```text
//! x⁺ = argmin_y ⟨G + Aᵀλ + ρAᵀAx, y − x⟩ + ρ‖y − x‖²_D
//!    = (1/(2ρ)) D⁻¹ [ρL⁺x − G − Aᵀλ]
//! λ⁺ = λ + ρAx⁺
//! ```
//!
//! where `G` is the batch zeroth-order estimate of `∇f_μ(x)`. The closed form
//! is read off the first-order condition `G + Aᵀλ + ρAᵀAx + 2ρD(x⁺ − x) = 0`.
//!
//! Two executions are provided: [`run_centralized`] works on stacked vectors
//! with the dense operators, [`run_distributed`] simulates agents that only see
//! their own oracle, their neighbors' primals and the duals on incident edges.
//! Both draw every random number from streams keyed by `(seed, agent,
//! iteration)`, so they produce the same trajectory.

mod distributed;

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distributed::{run_distributed, run_distributed_with, MessageStats};

use crate::graph::{build_matrices, GraphError, NetworkMatrices, Topology};
use crate::metrics::{self, AnalysisConstants, MetricRecord, MetricsError, ValidationReport};
use crate::objectives::{self, LocalObjective};
use crate::rng::{self, purpose};
use crate::szo::{self, NoiseModel, Oracle, OracleError, SmoothingParams};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("agent {agent}, iteration {iter}: {source}")]
    Oracle {
        agent: usize,
        iter: usize,
        #[source]
        source: OracleError,
    },
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Params(String),
    #[error("checkpoint does not match the problem: {0}")]
    Checkpoint(String),
}

/// Graph, operators, one local objective per agent, and the oracle noise.
#[derive(Debug, Clone)]
pub struct Problem {
    pub topology: Topology,
    pub matrices: NetworkMatrices,
    pub objectives: Vec<LocalObjective>,
    pub noise: NoiseModel,
}

impl Problem {
    /// The topology's block dimension is taken from the objectives.
    pub fn new(topology: Topology, objectives: Vec<LocalObjective>, noise: NoiseModel) -> Result<Self, EngineError> {
        if objectives.len() != topology.num_nodes() {
            return Err(EngineError::Dimension {
                what: "objective list",
                expected: topology.num_nodes(),
                got: objectives.len(),
            });
        }
        let m = objectives[0].dim();
        if let Some(bad) = objectives.iter().find(|f| f.dim() != m) {
            return Err(EngineError::Dimension { what: "local objective", expected: m, got: bad.dim() });
        }
        noise.validate().map_err(|e| EngineError::Params(e.to_string()))?;
        let topology = topology.with_block_dim(m)?;
        let matrices = build_matrices(&topology)?;
        Ok(Problem { topology, matrices, objectives, noise })
    }

    pub fn num_agents(&self) -> usize {
        self.topology.num_nodes()
    }

    pub fn block_dim(&self) -> usize {
        self.topology.block_dim()
    }

    pub fn dim(&self) -> usize {
        self.topology.dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.topology.dual_dim()
    }

    /// `L₀` of the stacked objective.
    pub fn lipschitz(&self) -> f64 {
        objectives::global_lipschitz(&self.objectives)
    }

    pub fn lower_bound(&self) -> f64 {
        objectives::global_lower_bound(&self.objectives)
    }

    pub fn validate(&self, params: &AlgoParams) -> Result<ValidationReport, EngineError> {
        Ok(metrics::validate_params(self.lipschitz(), params.mu, &self.matrices, params.c, params.rho)?)
    }

    fn block(&self, i: usize) -> std::ops::Range<usize> {
        let m = self.block_dim();
        i * m..(i + 1) * m
    }
}

/// How `x⁰` is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitRule {
    /// Each agent's block i.i.d. uniform on `[lo, hi]^M`.
    Uniform { lo: f64, hi: f64 },
    /// One uniform draw on `[lo, hi]^M` shared by every agent.
    Consensual { lo: f64, hi: f64 },
    /// Stacked `x⁰` given explicitly.
    Explicit { x: Vec<f64> },
}

/// What the primal step is fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// The batch zeroth-order estimate.
    #[default]
    Estimator,
    /// The reference `∇f_μ` (the large-batch limit).
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub rho: f64,
    pub mu: f64,
    pub batch: usize,
    pub total_iters: usize,
    pub seed: u64,
    pub init: InitRule,
    /// Weight of the feasibility term in the potential.
    pub c: f64,
    pub gradient: GradientSource,
    /// Monte-Carlo budget for `∇f_μ` and `f_μ` where no closed form exists.
    pub reference_samples: usize,
}

impl AlgoParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |what: &str, v: f64| EngineError::Params(format!("{what} must be positive and finite, got {v}"));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(bad("rho", self.rho));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(bad("mu", self.mu));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(bad("c", self.c));
        }
        if self.batch == 0 {
            return Err(EngineError::Params("batch must be at least 1".into()));
        }
        if self.total_iters == 0 {
            return Err(EngineError::Params("total_iters must be at least 1".into()));
        }
        if self.reference_samples < 2 {
            return Err(EngineError::Params("reference_samples must be at least 2".into()));
        }
        if let InitRule::Uniform { lo, hi } | InitRule::Consensual { lo, hi } = self.init {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(EngineError::Params(format!("init box [{lo}, {hi}] is empty or infinite")));
            }
        }
        Ok(())
    }

    pub fn smoothing(&self) -> SmoothingParams {
        SmoothingParams { mu: self.mu, batch: self.batch }
    }
}

/// Stacked primal/dual iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub iter: usize,
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub state: IterateState,
    /// Dual before the last step (the gap pairs `x^r` with `λ^{r−1}`).
    pub lambda_prev: Vec<f64>,
    pub output_index: usize,
    pub output: Option<OutputIterate>,
}

/// The randomly selected iterate `(x^u, λ^u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputIterate {
    pub index: usize,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Read-only view handed to observers after each iteration.
#[derive(Debug)]
pub struct StepView<'a> {
    pub iter: usize,
    pub x: &'a [f64],
    pub x_prev: &'a [f64],
    pub lambda: &'a [f64],
    pub lambda_prev: &'a [f64],
    /// `G` used by the primal step that produced `x`.
    pub gradient: &'a [f64],
    pub record: &'a MetricRecord,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Records for iterations `1..=T` (or up to the stop point).
    pub trace: Vec<MetricRecord>,
    /// Record at `x⁰` (with `λ^{−1} := 0` and `x^{−1} := x⁰`).
    pub initial: MetricRecord,
    pub output: Option<OutputIterate>,
    pub checkpoint: Checkpoint,
    pub validation: ValidationReport,
    pub messages: Option<MessageStats>,
}

/// Closed-form primal update `x⁺ = (1/(2ρ)) D⁻¹ [ρL⁺x − G − Aᵀλ]`.
pub fn primal_step(
    x: &[f64],
    lambda: &[f64],
    gradient: &[f64],
    mats: &NetworkMatrices,
    rho: f64,
) -> Result<Vec<f64>, EngineError> {
    check_len("x", x, mats.dim())?;
    check_len("gradient", gradient, mats.dim())?;
    check_len("lambda", lambda, mats.dual_dim())?;
    if !(rho > 0.0) {
        return Err(EngineError::Params(format!("rho must be positive, got {rho}")));
    }
    let rhs = &mats.signless_laplacian * DVector::from_column_slice(x) * rho
        - DVector::from_column_slice(gradient)
        - mats.incidence.tr_mul(&DVector::from_column_slice(lambda));
    Ok(rhs.iter().zip(mats.degree.iter()).map(|(v, d)| v / (2.0 * rho * d)).collect())
}

/// `λ⁺ = λ + ρAx⁺`
pub fn dual_step(x_new: &[f64], lambda: &[f64], rho: f64, mats: &NetworkMatrices) -> Result<Vec<f64>, EngineError> {
    check_len("x", x_new, mats.dim())?;
    check_len("lambda", lambda, mats.dual_dim())?;
    let ax = &mats.incidence * DVector::from_column_slice(x_new);
    Ok(lambda.iter().zip(ax.iter()).map(|(l, a)| l + rho * a).collect())
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<(), EngineError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(EngineError::Dimension { what, expected, got: v.len() })
    }
}

/// `x⁰` per the init rule, agent blocks from `(seed, INIT, agent)`.
pub fn initial_point(problem: &Problem, params: &AlgoParams) -> Result<Vec<f64>, EngineError> {
    let m = problem.block_dim();
    let q = problem.dim();
    let x = match &params.init {
        InitRule::Explicit { x } => {
            check_len("explicit x0", x, q)?;
            x.clone()
        }
        InitRule::Uniform { lo, hi } => (0..problem.num_agents())
            .flat_map(|i| {
                let mut r = rng::stream(params.seed, &[purpose::INIT, i as u64]);
                (0..m).map(move |_| r.gen_range(*lo..*hi)).collect::<Vec<_>>()
            })
            .collect(),
        InitRule::Consensual { lo, hi } => {
            let mut r = rng::stream(params.seed, &[purpose::INIT]);
            let block: Vec<f64> = (0..m).map(|_| r.gen_range(*lo..*hi)).collect();
            block.repeat(problem.num_agents())
        }
    };
    for (i, f) in problem.objectives.iter().enumerate() {
        if !f.domain().contains(&x[problem.block(i)]) {
            return Err(EngineError::Oracle { agent: i, iter: 0, source: OracleError::OutsideDomain });
        }
    }
    Ok(x)
}

/// `u` uniform on `{0, …, T−1}`.
pub fn output_index(params: &AlgoParams) -> usize {
    rng::stream(params.seed, &[purpose::OUTPUT_INDEX]).gen_range(0..params.total_iters)
}

/// Agent `i`'s block of `G` at iteration `iter`.
pub(crate) fn local_gradient(
    problem: &Problem,
    params: &AlgoParams,
    agent: usize,
    iter: usize,
    x_i: &[f64],
) -> Result<Vec<f64>, EngineError> {
    let f = &problem.objectives[agent];
    let mut r = rng::stream(params.seed, &[purpose::ESTIMATOR, agent as u64, iter as u64]);
    let err = |source| EngineError::Oracle { agent, iter, source };
    match params.gradient {
        GradientSource::Estimator => {
            Oracle::new(f, problem.noise).estimate_gradient(x_i, params.smoothing(), &mut r).map_err(err)
        }
        GradientSource::Reference => {
            Ok(szo::smoothed_gradient_reference(f, x_i, params.mu, params.reference_samples, &mut r).mean)
        }
    }
}

/// Computes metric records from stacked states.
pub(crate) struct Monitor<'a> {
    problem: &'a Problem,
    params: &'a AlgoParams,
    consts: AnalysisConstants,
    start: Instant,
}

impl<'a> Monitor<'a> {
    pub(crate) fn new(problem: &'a Problem, params: &'a AlgoParams) -> Result<Self, EngineError> {
        let consts = AnalysisConstants::new(problem.lipschitz(), params.mu, &problem.matrices, params.c, params.rho)?;
        Ok(Monitor { problem, params, consts, start: Instant::now() })
    }

    pub(crate) fn record(
        &self,
        iter: usize,
        x: &[f64],
        x_prev: &[f64],
        lambda: &[f64],
        lambda_prev: &[f64],
    ) -> MetricRecord {
        let p = self.problem;
        let mut grad = Vec::with_capacity(p.dim());
        let mut grad_se = Vec::with_capacity(p.dim());
        let mut f_mu = 0.0;
        for (i, f) in p.objectives.iter().enumerate() {
            let mut r = rng::stream(self.params.seed, &[purpose::METRICS, i as u64, iter as u64]);
            let s = f.smoothed(&x[p.block(i)], self.params.mu, self.params.reference_samples, &mut r);
            f_mu += s.value;
            grad.extend(s.gradient);
            grad_se.extend(s.gradient_se);
        }
        let m = &p.matrices;
        MetricRecord {
            iter,
            stationarity_gap: metrics::stationarity_gap(x, lambda_prev, m, self.params.rho, &grad),
            constraint_violation: metrics::constraint_violation(x, m),
            potential: metrics::potential(x, x_prev, lambda, m, &self.consts, f_mu),
            objective: objectives::global_value(&p.objectives, x),
            gap_std_err: metrics::gap_std_err(x, lambda_prev, m, self.params.rho, &grad, &grad_se),
            wall_time: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// Common setup for both execution modes: validated params, start state and
/// the output bookkeeping.
pub(crate) struct Setup {
    pub state: IterateState,
    pub lambda_prev: Vec<f64>,
    pub output_index: usize,
    pub output: Option<OutputIterate>,
    pub validation: ValidationReport,
}

pub(crate) fn setup(problem: &Problem, params: &AlgoParams, resume: Option<Checkpoint>) -> Result<Setup, EngineError> {
    params.validate()?;
    let validation = problem.validate(params)?;
    let output_index = output_index(params);
    match resume {
        Some(cp) => {
            if cp.state.x.len() != problem.dim()
                || cp.state.x_prev.len() != problem.dim()
                || cp.state.lambda.len() != problem.dual_dim()
                || cp.lambda_prev.len() != problem.dual_dim()
            {
                return Err(EngineError::Checkpoint("vector lengths differ from the problem".into()));
            }
            if cp.output_index != output_index {
                return Err(EngineError::Checkpoint("output index differs (seed or T changed)".into()));
            }
            if cp.state.iter > params.total_iters {
                return Err(EngineError::Checkpoint("checkpoint is past total_iters".into()));
            }
            Ok(Setup { state: cp.state, lambda_prev: cp.lambda_prev, output_index, output: cp.output, validation })
        }
        None => {
            let x = initial_point(problem, params)?;
            let lambda = vec![0.0; problem.dual_dim()];
            let state = IterateState { x_prev: x.clone(), x, lambda: lambda.clone(), iter: 0 };
            Ok(Setup { state, lambda_prev: lambda, output_index, output: None, validation })
        }
    }
}

pub(crate) fn snapshot(s: &IterateState) -> OutputIterate {
    OutputIterate { index: s.iter, x: s.x.clone(), lambda: s.lambda.clone() }
}

pub type Observer<'o> = &'o mut dyn FnMut(&StepView<'_>);

/// Matrix-form execution over `params.total_iters` iterations.
pub fn run_centralized(problem: &Problem, params: &AlgoParams) -> Result<RunOutput, EngineError> {
    run_centralized_with(problem, params, None, None, &mut |_| {})
}

/// Matrix-form execution, optionally resuming from `resume` and stopping after
/// iteration `stop_at` (the checkpoint in the output then continues the run).
pub fn run_centralized_with(
    problem: &Problem,
    params: &AlgoParams,
    resume: Option<Checkpoint>,
    stop_at: Option<usize>,
    observer: Observer<'_>,
) -> Result<RunOutput, EngineError> {
    let Setup { mut state, mut lambda_prev, output_index, mut output, validation } = setup(problem, params, resume)?;
    let monitor = Monitor::new(problem, params)?;
    let initial = monitor.record(state.iter, &state.x, &state.x_prev, &state.lambda, &lambda_prev);
    let stop = stop_at.unwrap_or(params.total_iters).min(params.total_iters);
    let mut trace = Vec::with_capacity(stop.saturating_sub(state.iter));
    let m = &problem.matrices;
    let mut gradient = vec![0.0; problem.dim()];

    while state.iter < stop {
        if state.iter == output_index {
            output = Some(snapshot(&state));
        }
        let r = state.iter;
        for i in 0..problem.num_agents() {
            let block = problem.block(i);
            let g = local_gradient(problem, params, i, r, &state.x[block.clone()])?;
            gradient[block].copy_from_slice(&g);
        }
        let x_new = primal_step(&state.x, &state.lambda, &gradient, m, params.rho)?;
        let lambda_new = dual_step(&x_new, &state.lambda, params.rho, m)?;
        for (i, f) in problem.objectives.iter().enumerate() {
            if !f.domain().contains(&x_new[problem.block(i)]) {
                return Err(EngineError::Oracle { agent: i, iter: r + 1, source: OracleError::OutsideDomain });
            }
        }
        lambda_prev = std::mem::replace(&mut state.lambda, lambda_new);
        state.x_prev = std::mem::replace(&mut state.x, x_new);
        state.iter = r + 1;
        let record = monitor.record(state.iter, &state.x, &state.x_prev, &state.lambda, &lambda_prev);
        observer(&StepView {
            iter: state.iter,
            x: &state.x,
            x_prev: &state.x_prev,
            lambda: &state.lambda,
            lambda_prev: &lambda_prev,
            gradient: &gradient,
            record: &record,
        });
        trace.push(record);
    }

    Ok(RunOutput {
        trace,
        initial,
        output,
        checkpoint: Checkpoint { state, lambda_prev, output_index, output: None },
        validation,
        messages: None,
    }
    .with_checkpoint_output())
}

impl RunOutput {
    fn with_checkpoint_output(mut self) -> Self {
        self.checkpoint.output = self.output.clone();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_graph;
    use crate::graph::GraphKind;
    use crate::objectives::{quadratic_family, random_quadratic, DomainBox};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn edge() -> NetworkMatrices {
        build_matrices(&Topology::new(2, vec![(0, 1)], 1).unwrap()).unwrap()
    }

    fn zero_objectives(n: usize, m: usize) -> Vec<LocalObjective> {
        (0..n)
            .map(|_| quadratic_family(DMatrix::zeros(m, m), DVector::zeros(m), DomainBox::unbounded(m)).unwrap())
            .collect()
    }

    fn params(t: usize) -> AlgoParams {
        AlgoParams {
            rho: 50.0,
            mu: 0.1,
            batch: 4,
            total_iters: t,
            seed: 11,
            init: InitRule::Uniform { lo: -1.0, hi: 1.0 },
            c: 10.0,
            gradient: GradientSource::Estimator,
            reference_samples: 100,
        }
    }

    #[test]
    fn primal_step_hand_example() {
        let x = primal_step(&[1.0, 0.0], &[0.0], &[0.0, 0.0], &edge(), 1.0).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
    }

    #[test]
    fn primal_step_consensus_fixed_point() {
        let x = primal_step(&[0.3, 0.3], &[0.0], &[0.0, 0.0], &edge(), 7.0).unwrap();
        assert_relative_eq!(x[0], 0.3, max_relative = 1e-15);
        assert_relative_eq!(x[1], 0.3, max_relative = 1e-15);
    }

    #[test]
    fn primal_step_with_dual_matches_argmin() {
        // first-order condition of the subproblem, solved as a linear system:
        // 2ρD y = 2ρD x − G − Aᵀλ − ρAᵀAx
        let m = edge();
        let (x, l, g, rho) = ([1.0, 0.0], [1.0], [0.0, 0.0], 2.0);
        let xv = DVector::from_column_slice(&x);
        let lhs = m.degree_matrix() * (2.0 * rho);
        let rhs = &lhs * &xv
            - DVector::from_column_slice(&g)
            - m.incidence.tr_mul(&DVector::from_column_slice(&l))
            - &m.signed_laplacian * &xv * rho;
        let y = lhs.lu().solve(&rhs).unwrap();
        let got = primal_step(&x, &l, &g, &m, rho).unwrap();
        assert_relative_eq!(got[0], y[0], max_relative = 1e-14);
        assert_relative_eq!(got[1], y[1], max_relative = 1e-14);
        // by hand: (1, 0) − (1/4)[(2, −2) + (1, −1)]
        assert_relative_eq!(got[0], 0.25, max_relative = 1e-15);
        assert_relative_eq!(got[1], 0.75, max_relative = 1e-15);
    }

    #[test]
    fn dual_step_examples() {
        let m = edge();
        assert_eq!(dual_step(&[0.5, 0.5], &[0.0], 1.0, &m).unwrap(), vec![0.0]);
        assert_eq!(dual_step(&[1.0, 0.0], &[1.0], 2.0, &m).unwrap(), vec![3.0]);
        assert_eq!(dual_step(&[2.0, 2.0], &[-4.0], 9.0, &m).unwrap(), vec![-4.0]);
    }

    #[test]
    fn step_dimension_errors() {
        let m = edge();
        assert!(matches!(primal_step(&[1.0], &[0.0], &[0.0, 0.0], &m, 1.0), Err(EngineError::Dimension { .. })));
        assert!(matches!(
            primal_step(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], &m, 1.0),
            Err(EngineError::Dimension { .. })
        ));
        assert!(matches!(dual_step(&[1.0, 0.0, 3.0], &[0.0], 1.0, &m), Err(EngineError::Dimension { .. })));
    }

    #[test]
    fn zero_objective_consensual_start_is_stationary() {
        let topo = generate_graph(GraphKind::Ring, 4, 0).unwrap();
        let p = Problem::new(topo, zero_objectives(4, 2), NoiseModel::None).unwrap();
        let mut prm = params(20);
        prm.init = InitRule::Consensual { lo: -1.0, hi: 1.0 };
        let x0 = initial_point(&p, &prm).unwrap();
        let mut seen = 0;
        let out = run_centralized_with(&p, &prm, None, None, &mut |v: &StepView| {
            assert_eq!(v.x, &x0[..]);
            assert!(v.lambda.iter().all(|l| *l == 0.0));
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 20);
        assert!(out.trace.iter().all(|r| r.stationarity_gap == 0.0));
    }

    #[test]
    fn one_step_large_batch_matches_closed_form() {
        let topo = Topology::new(3, vec![(0, 1), (1, 2)], 2).unwrap();
        let objs: Vec<_> = (0..3).map(|i| random_quadratic(2, (0.5, 1.5), 5.0, 4, i).unwrap()).collect();
        let p = Problem::new(topo, objs, NoiseModel::None).unwrap();
        let mut prm = params(1);
        prm.batch = 20_000;
        let x0 = initial_point(&p, &prm).unwrap();
        let exact: Vec<f64> = (0..3)
            .flat_map(|i| p.objectives[i].smoothed_gradient_exact(&x0[2 * i..2 * i + 2], prm.mu).unwrap())
            .collect();
        let expected = primal_step(&x0, &vec![0.0; 4], &exact, &p.matrices, prm.rho).unwrap();
        let mut got = vec![];
        run_centralized_with(&p, &prm, None, None, &mut |v: &StepView| got = v.x.to_vec()).unwrap();
        // G error of a 20 000-sample batch is ~‖∇f‖·√(M+1)/√J; divided by 2ρd
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 5.0 * 10.0 / 20_000f64.sqrt() / (2.0 * prm.rho), "{a} vs {b}");
        }
    }

    #[test]
    fn deterministic_traces() {
        let topo = generate_graph(GraphKind::RandomConnected { extra_edge_prob: 0.3 }, 5, 2).unwrap();
        let objs: Vec<_> = (0..5).map(|i| random_quadratic(2, (-1.0, 2.0), 3.0, 1, i).unwrap()).collect();
        let p = Problem::new(topo, objs, NoiseModel::AdditiveGaussian { std_dev: 0.1 }).unwrap();
        let a = run_centralized(&p, &params(15)).unwrap();
        let b = run_centralized(&p, &params(15)).unwrap();
        let strip = |t: &[MetricRecord]| t.iter().map(|r| MetricRecord { wall_time: 0.0, ..*r }).collect::<Vec<_>>();
        assert_eq!(strip(&a.trace), strip(&b.trace));
        assert_eq!(a.output, b.output);
        assert_eq!(a.checkpoint, b.checkpoint);
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let topo = generate_graph(GraphKind::Ring, 4, 0).unwrap();
        let objs: Vec<_> = (0..4).map(|i| random_quadratic(1, (0.5, 1.0), 3.0, 2, i).unwrap()).collect();
        let p = Problem::new(topo, objs, NoiseModel::AdditiveGaussian { std_dev: 0.05 }).unwrap();
        let prm = params(30);
        let full = run_centralized(&p, &prm).unwrap();
        let first = run_centralized_with(&p, &prm, None, Some(12), &mut |_| {}).unwrap();
        assert_eq!(first.trace.len(), 12);
        let json = serde_json::to_string(&first.checkpoint).unwrap();
        let cp: Checkpoint = serde_json::from_str(&json).unwrap();
        let rest = run_centralized_with(&p, &prm, Some(cp), None, &mut |_| {}).unwrap();
        assert_eq!(rest.trace.len(), 18);
        assert_eq!(rest.checkpoint.state, full.checkpoint.state);
        assert_eq!(rest.output, full.output);
        for (a, b) in first.trace.iter().chain(&rest.trace).zip(&full.trace) {
            assert_eq!(a.stationarity_gap, b.stationarity_gap);
            assert_eq!(a.potential, b.potential);
        }
    }

    #[test]
    fn output_index_in_range_and_snapshot_consistent() {
        let topo = generate_graph(GraphKind::Ring, 3, 0).unwrap();
        let p = Problem::new(topo, zero_objectives(3, 1), NoiseModel::None).unwrap();
        for seed in 0..20 {
            let mut prm = params(7);
            prm.seed = seed;
            let out = run_centralized(&p, &prm).unwrap();
            let u = out.output.unwrap();
            assert!(u.index < 7);
            assert_eq!(u.index, output_index(&prm));
        }
    }

    #[test]
    fn bad_params_rejected() {
        let topo = generate_graph(GraphKind::Ring, 3, 0).unwrap();
        let p = Problem::new(topo, zero_objectives(3, 1), NoiseModel::None).unwrap();
        for f in [
            |p: &mut AlgoParams| p.rho = 0.0,
            |p: &mut AlgoParams| p.mu = -1.0,
            |p: &mut AlgoParams| p.batch = 0,
            |p: &mut AlgoParams| p.total_iters = 0,
            |p: &mut AlgoParams| p.init = InitRule::Uniform { lo: 1.0, hi: 1.0 },
        ] {
            let mut prm = params(3);
            f(&mut prm);
            assert!(matches!(run_centralized(&p, &prm), Err(EngineError::Params(_))));
        }
    }

    #[test]
    fn problem_rejects_mismatched_objectives() {
        let topo = generate_graph(GraphKind::Ring, 3, 0).unwrap();
        assert!(Problem::new(topo.clone(), zero_objectives(2, 1), NoiseModel::None).is_err());
        let mut objs = zero_objectives(3, 1);
        objs[2] = zero_objectives(1, 2).remove(0);
        assert!(Problem::new(topo, objs, NoiseModel::None).is_err());
    }
}
