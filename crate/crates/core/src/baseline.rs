//! Randomized gradient-free consensus baseline.
//!
//! Each agent averages its neighbors' iterates with Metropolis weights and then
//! steps along a single-sample Gaussian-smoothing gradient estimate with a
//! diminishing stepsize `step_c/√r`, projecting back onto its domain box. This
//! is a reconstruction for qualitative comparison; only the stepsize rule is
//! pinned down by the method's description.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::engine::{initial_point, AlgoParams, EngineError, Monitor, Problem};
use crate::graph::Topology;
use crate::metrics::MetricRecord;
use crate::rng::{self, purpose};
use crate::szo::Oracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgfParams {
    pub mu: f64,
    pub step_c: f64,
    pub total_iters: usize,
    pub seed: u64,
}

impl RgfParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(EngineError::Params(format!("baseline mu must be positive, got {}", self.mu)));
        }
        if !(self.step_c > 0.0 && self.step_c.is_finite()) {
            return Err(EngineError::Params(format!("baseline step_c must be positive, got {}", self.step_c)));
        }
        if self.total_iters == 0 {
            return Err(EngineError::Params("baseline total_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Metropolis–Hastings weights `W_ij = 1/(1 + max(dᵢ, dⱼ))` on edges, the
/// diagonal taking the remainder of each row.
pub fn build_mixing(topo: &Topology) -> DMatrix<f64> {
    let n = topo.num_nodes();
    let d = topo.degrees();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in topo.edges() {
        let v = 1.0 / (1.0 + d[i].max(d[j]) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    w
}

pub fn stepsize(step_c: f64, r: usize) -> f64 {
    step_c / (r as f64).sqrt()
}

/// `xᵢ⁺ = Π_box[Σⱼ Wᵢⱼ xⱼ − (step_c/√r) Gᵢ]`, `r ≥ 1`, with `Gᵢ` drawn from the
/// stream `(seed, BASELINE, i, r)`.
pub fn rgf_step(
    x: &[f64],
    r: usize,
    mixing: &DMatrix<f64>,
    problem: &Problem,
    params: &RgfParams,
) -> Result<Vec<f64>, EngineError> {
    if r == 0 {
        return Err(EngineError::Params("baseline iterations start at r = 1".into()));
    }
    let n = problem.num_agents();
    let m = problem.block_dim();
    if x.len() != n * m {
        return Err(EngineError::Dimension { what: "x", expected: n * m, got: x.len() });
    }
    let step = stepsize(params.step_c, r);
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let xi = &x[i * m..(i + 1) * m];
        let f = &problem.objectives[i];
        let mut rng = rng::stream(params.seed, &[purpose::BASELINE, i as u64, r as u64]);
        let g = Oracle::new(f, problem.noise)
            .single_estimate(xi, params.mu, &mut rng)
            .map_err(|source| EngineError::Oracle { agent: i, iter: r, source })?;
        let block = &mut out[i * m..(i + 1) * m];
        for j in 0..n {
            let wij = mixing[(i, j)];
            if wij != 0.0 {
                for k in 0..m {
                    block[k] += wij * x[j * m + k];
                }
            }
        }
        for k in 0..m {
            block[k] -= step * g[k];
        }
        f.domain().project(block);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RgfOutput {
    pub trace: Vec<MetricRecord>,
    pub initial: MetricRecord,
    pub x: Vec<f64>,
}

/// Runs the baseline from the same `x⁰` as the primal-dual method with
/// `metric_params`. Gap and potential are evaluated with `λ ≡ 0` and the
/// primal-dual method's `ρ`, `c`, so the curves share a scale.
pub fn run_rgf(problem: &Problem, params: &RgfParams, metric_params: &AlgoParams) -> Result<RgfOutput, EngineError> {
    params.validate()?;
    metric_params.validate()?;
    let mixing = build_mixing(&problem.topology);
    let monitor = Monitor::new(problem, metric_params)?;
    let zero = vec![0.0; problem.dual_dim()];
    let mut x = initial_point(problem, metric_params)?;
    let initial = monitor.record(0, &x, &x, &zero, &zero);
    let mut trace = Vec::with_capacity(params.total_iters);
    for r in 1..=params.total_iters {
        let x_new = rgf_step(&x, r, &mixing, problem, params)?;
        trace.push(monitor.record(r, &x_new, &x, &zero, &zero));
        x = x_new;
    }
    Ok(RgfOutput { trace, initial, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{GradientSource, InitRule};
    use crate::graph::{generate_graph, GraphKind};
    use crate::objectives::{quadratic_family, DomainBox, LocalObjective};
    use crate::szo::NoiseModel;
    use nalgebra::DVector;

    fn zeros(n: usize, m: usize) -> Vec<LocalObjective> {
        (0..n)
            .map(|_| quadratic_family(DMatrix::zeros(m, m), DVector::zeros(m), DomainBox::unbounded(m)).unwrap())
            .collect()
    }

    fn rgf(t: usize) -> RgfParams {
        RgfParams { mu: 0.1, step_c: 1.0, total_iters: t, seed: 3 }
    }

    #[test]
    fn mixing_examples() {
        let w = build_mixing(&Topology::new(2, vec![(0, 1)], 1).unwrap());
        assert_eq!(w, DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]));
        let w = build_mixing(&generate_graph(GraphKind::Ring, 3, 0).unwrap());
        for v in w.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let star = Topology::new(4, vec![(0, 1), (0, 2), (0, 3)], 1).unwrap();
        let w = build_mixing(&star);
        assert_eq!(w[(0, 1)], 0.25);
        assert_eq!(w[(0, 0)], 0.25);
        assert_eq!(w[(1, 1)], 0.75);
    }

    #[test]
    fn mixing_is_doubly_stochastic_and_sparse() {
        let topo = generate_graph(GraphKind::RandomConnected { extra_edge_prob: 0.3 }, 9, 4).unwrap();
        let w = build_mixing(&topo);
        let nb = topo.neighbors();
        for i in 0..9 {
            assert!((w.row(i).sum() - 1.0).abs() < 1e-14);
            assert!((w.column(i).sum() - 1.0).abs() < 1e-14);
            for j in 0..9 {
                assert_eq!(w[(i, j)], w[(j, i)]);
                if i != j && !nb[i].contains(&j) {
                    assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn averaging_step() {
        let topo = Topology::new(2, vec![(0, 1)], 1).unwrap();
        let p = Problem::new(topo.clone(), zeros(2, 1), NoiseModel::None).unwrap();
        let x = rgf_step(&[1.0, 0.0], 1, &build_mixing(&topo), &p, &rgf(1)).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
        let x = rgf_step(&[0.3, 0.3], 7, &build_mixing(&topo), &p, &rgf(1)).unwrap();
        assert_eq!(x, vec![0.3, 0.3]);
    }

    #[test]
    fn stepsize_halves_at_four() {
        assert_eq!(stepsize(1.0, 4), 0.5 * stepsize(1.0, 1));
        let topo = Topology::new(2, vec![(0, 1)], 1).unwrap();
        let p = Problem::new(topo.clone(), zeros(2, 1), NoiseModel::None).unwrap();
        assert!(rgf_step(&[0.0, 0.0], 0, &build_mixing(&topo), &p, &rgf(1)).is_err());
    }

    #[test]
    fn zero_gradient_contracts_to_average() {
        let topo = generate_graph(GraphKind::RandomConnected { extra_edge_prob: 0.2 }, 8, 1).unwrap();
        let p = Problem::new(topo.clone(), zeros(8, 2), NoiseModel::None).unwrap();
        let w = build_mixing(&topo);
        let mut x: Vec<f64> = (0..16).map(|k| (k as f64 * 0.37).sin()).collect();
        let avg = |x: &[f64], k: usize| (0..8).map(|i| x[2 * i + k]).sum::<f64>() / 8.0;
        let target = [avg(&x, 0), avg(&x, 1)];
        let dev = |x: &[f64]| (0..16).map(|c| (x[c] - target[c % 2]).powi(2)).sum::<f64>().sqrt();
        let d0 = dev(&x);
        let mut prev = d0;
        for r in 1..=100 {
            x = rgf_step(&x, r, &w, &p, &rgf(100)).unwrap();
            let d = dev(&x);
            assert!(d <= prev * (1.0 + 1e-12));
            prev = d;
        }
        assert!(prev < 1e-6 * d0);
        assert!((avg(&x, 0) - target[0]).abs() < 1e-12);
    }

    #[test]
    fn run_records_every_iteration() {
        let topo = generate_graph(GraphKind::Ring, 4, 0).unwrap();
        let p = Problem::new(topo, zeros(4, 1), NoiseModel::None).unwrap();
        let metric = AlgoParams {
            rho: 10.0,
            mu: 0.1,
            batch: 1,
            total_iters: 12,
            seed: 1,
            init: InitRule::Uniform { lo: -1.0, hi: 1.0 },
            c: 10.0,
            gradient: GradientSource::Estimator,
            reference_samples: 10,
        };
        let out = run_rgf(&p, &rgf(12), &metric).unwrap();
        assert_eq!(out.trace.len(), 12);
        assert!(out.trace.last().unwrap().constraint_violation < out.initial.constraint_violation);
    }
}
