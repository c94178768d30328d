//! Distributed zeroth-order primal-dual optimization over undirected graphs.
//!
//! Agents hold private nonsmooth local costs they can only query through a
//! noisy function-value oracle. They agree on a common decision vector by
//! running an augmented-Lagrangian primal-dual method on the edge-consensus
//! reformulation, with Gaussian-smoothing gradient estimates in place of
//! gradients.

pub mod baseline;
pub mod engine;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod objectives;
pub mod rng;
pub mod szo;
