//! Synchronous message-passing simulation of the primal-dual iteration.
//!
//! Agent `i` owns the dual `λ_e` of every edge `e = (i, j)` listed with `i`
//! first. One round:
//!
//! 1. query the local oracle for `Gᵢ`;
//! 2. `xᵢ⁺ = [ρ(dᵢxᵢ + Σ_{j∈𝒩ᵢ} xⱼ) − Gᵢ − Σ_{e=(i,·)} λ_e + Σ_{e=(·,i)} λ_e] / (2ρdᵢ)`;
//! 3. send `xᵢ⁺` to every neighbor;
//! 4. update each owned `λ_e += ρ(xᵢ⁺ − xⱼ⁺)` and send it to the other endpoint.
//!
//! Messages are delivered reliably at the end of each phase, in sender order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    local_gradient, setup, snapshot, AlgoParams, Checkpoint, EngineError, IterateState, Monitor, Observer, Problem,
    RunOutput, Setup, StepView,
};
use crate::szo::OracleError;

/// Message counts per agent. `setup_messages` is the initial primal exchange.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageStats {
    pub rounds: usize,
    pub primal_sent: Vec<usize>,
    pub dual_sent: Vec<usize>,
    pub setup_messages: usize,
    pub scalars_sent: usize,
}

impl MessageStats {
    /// Messages sent by `agent` per round (both kinds).
    pub fn per_round(&self, agent: usize) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        (self.primal_sent[agent] + self.dual_sent[agent]) as f64 / self.rounds as f64
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Primal(Vec<f64>),
    Dual { edge: usize, lambda: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Message {
    from: usize,
    to: usize,
    payload: Payload,
}

#[derive(Debug, Clone)]
struct OwnedDual {
    edge: usize,
    neighbor: usize,
    lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
struct AgentState {
    id: usize,
    degree: f64,
    x: Vec<f64>,
    owned: Vec<OwnedDual>,
    /// Duals of edges `(j, i)`, as last received from their owners.
    received: BTreeMap<usize, Vec<f64>>,
    neighbor_x: BTreeMap<usize, Vec<f64>>,
}

impl AgentState {
    fn primal_update(&self, g: &[f64], rho: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len());
        for k in 0..self.x.len() {
            let neighbors: f64 = self.neighbor_x.values().map(|xj| xj[k]).sum();
            let owned: f64 = self.owned.iter().map(|o| o.lambda[k]).sum();
            let received: f64 = self.received.values().map(|l| l[k]).sum();
            let v = rho * (self.degree * self.x[k] + neighbors) - g[k] - (owned - received);
            out.push(v / (2.0 * rho * self.degree));
        }
        out
    }
}

struct Network {
    agents: Vec<AgentState>,
    stats: MessageStats,
    in_flight: Vec<Message>,
}

impl Network {
    fn send(&mut self, msg: Message) {
        let size = match &msg.payload {
            Payload::Primal(x) => {
                self.stats.primal_sent[msg.from] += 1;
                x.len()
            }
            Payload::Dual { lambda, .. } => {
                self.stats.dual_sent[msg.from] += 1;
                lambda.len()
            }
        };
        self.stats.scalars_sent += size;
        self.in_flight.push(msg);
    }

    fn deliver(&mut self) {
        for msg in std::mem::take(&mut self.in_flight) {
            let agent = &mut self.agents[msg.to];
            match msg.payload {
                Payload::Primal(x) => {
                    agent.neighbor_x.insert(msg.from, x);
                }
                Payload::Dual { edge, lambda } => {
                    agent.received.insert(edge, lambda);
                }
            }
        }
    }

    fn broadcast_primals(&mut self, neighbors: &[Vec<usize>]) {
        for i in 0..self.agents.len() {
            for &j in &neighbors[i] {
                let x = self.agents[i].x.clone();
                self.send(Message { from: i, to: j, payload: Payload::Primal(x) });
            }
        }
    }

    fn stacked_x(&self) -> Vec<f64> {
        self.agents.iter().flat_map(|a| a.x.iter().copied()).collect()
    }

    fn stacked_lambda(&self, num_edges: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_edges * m];
        for a in &self.agents {
            for o in &a.owned {
                out[o.edge * m..(o.edge + 1) * m].copy_from_slice(&o.lambda);
            }
        }
        out
    }
}

fn build_network(problem: &Problem, state: &IterateState, exchange: bool) -> Network {
    let n = problem.num_agents();
    let m = problem.block_dim();
    let degrees = problem.topology.degrees();
    let neighbors = problem.topology.neighbors();
    let mut agents: Vec<AgentState> = (0..n)
        .map(|i| AgentState {
            id: i,
            degree: degrees[i] as f64,
            x: state.x[i * m..(i + 1) * m].to_vec(),
            owned: Vec::new(),
            received: BTreeMap::new(),
            neighbor_x: BTreeMap::new(),
        })
        .collect();
    for (e, &(i, j)) in problem.topology.edges().iter().enumerate() {
        let lambda = state.lambda[e * m..(e + 1) * m].to_vec();
        agents[j].received.insert(e, lambda.clone());
        agents[i].owned.push(OwnedDual { edge: e, neighbor: j, lambda });
    }
    let mut net = Network {
        agents,
        stats: MessageStats { primal_sent: vec![0; n], dual_sent: vec![0; n], ..Default::default() },
        in_flight: Vec::new(),
    };
    if exchange {
        net.broadcast_primals(&neighbors);
        net.deliver();
        net.stats.setup_messages = net.stats.primal_sent.iter().sum();
        net.stats.primal_sent.iter_mut().for_each(|c| *c = 0);
    } else {
        // resuming: caches equal the checkpointed neighbor primals
        for i in 0..n {
            for &j in &neighbors[i] {
                let xj = state.x[j * m..(j + 1) * m].to_vec();
                net.agents[i].neighbor_x.insert(j, xj);
            }
        }
    }
    net.stats.scalars_sent = 0;
    net
}

/// Message-passing execution over `params.total_iters` rounds.
pub fn run_distributed(problem: &Problem, params: &AlgoParams) -> Result<RunOutput, EngineError> {
    run_distributed_with(problem, params, None, None, &mut |_| {})
}

/// Message-passing execution with resume/stop support; see
/// [`super::run_centralized_with`].
pub fn run_distributed_with(
    problem: &Problem,
    params: &AlgoParams,
    resume: Option<Checkpoint>,
    stop_at: Option<usize>,
    observer: Observer<'_>,
) -> Result<RunOutput, EngineError> {
    let fresh = resume.is_none();
    let Setup { mut state, mut lambda_prev, output_index, mut output, validation } = setup(problem, params, resume)?;
    let monitor = Monitor::new(problem, params)?;
    let initial = monitor.record(state.iter, &state.x, &state.x_prev, &state.lambda, &lambda_prev);
    let stop = stop_at.unwrap_or(params.total_iters).min(params.total_iters);
    let m = problem.block_dim();
    let num_edges = problem.topology.num_edges();
    let neighbors = problem.topology.neighbors();
    let mut net = build_network(problem, &state, fresh);
    let mut trace = Vec::with_capacity(stop.saturating_sub(state.iter));
    let mut gradient = vec![0.0; problem.dim()];

    while state.iter < stop {
        if state.iter == output_index {
            output = Some(snapshot(&state));
        }
        let r = state.iter;

        // local oracle queries and primal updates
        let mut updates = Vec::with_capacity(net.agents.len());
        for agent in &net.agents {
            let g = local_gradient(problem, params, agent.id, r, &agent.x)?;
            let x_new = agent.primal_update(&g, params.rho);
            if !problem.objectives[agent.id].domain().contains(&x_new) {
                return Err(EngineError::Oracle { agent: agent.id, iter: r + 1, source: OracleError::OutsideDomain });
            }
            gradient[agent.id * m..(agent.id + 1) * m].copy_from_slice(&g);
            updates.push(x_new);
        }
        for (agent, x_new) in net.agents.iter_mut().zip(updates) {
            agent.x = x_new;
        }
        net.broadcast_primals(&neighbors);
        net.deliver();

        // owned dual updates, forwarded to the other endpoint
        let mut outgoing = Vec::new();
        for agent in &mut net.agents {
            for o in &mut agent.owned {
                let xj = &agent.neighbor_x[&o.neighbor];
                for k in 0..m {
                    o.lambda[k] += params.rho * (agent.x[k] - xj[k]);
                }
                outgoing.push(Message {
                    from: agent.id,
                    to: o.neighbor,
                    payload: Payload::Dual { edge: o.edge, lambda: o.lambda.clone() },
                });
            }
        }
        for msg in outgoing {
            net.send(msg);
        }
        net.deliver();
        net.stats.rounds += 1;

        let x = net.stacked_x();
        let lambda = net.stacked_lambda(num_edges, m);
        lambda_prev = std::mem::replace(&mut state.lambda, lambda);
        state.x_prev = std::mem::replace(&mut state.x, x);
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
        checkpoint: Checkpoint { state, lambda_prev, output_index, output: output.clone() },
        output,
        validation,
        messages: Some(net.stats),
    })
}
