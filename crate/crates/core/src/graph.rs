//! Communication topology and the linear operators derived from it.
//!
//! Nodes are indexed `0..N`. The `k`-th listed edge `(i, j)` becomes row block
//! `k` of the incidence matrix with `+I_M` in column block `i` and `-I_M` in
//! column block `j`, so the listing order also fixes the sign and layout of the
//! edge duals.

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, purpose};

/// An eigenvalue counts as zero iff `|eig| <= ZERO_EIGEN_RTOL * max(eig)`.
pub const ZERO_EIGEN_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("block dimension must be positive")]
    ZeroBlockDim,
    #[error("edge {edge} references node {node}, but the graph has {num_nodes} nodes")]
    NodeOutOfRange { edge: usize, node: usize, num_nodes: usize },
    #[error("edge {edge} is a self-loop on node {node}")]
    SelfLoop { edge: usize, node: usize },
    #[error("edge {edge} duplicates the pair ({i}, {j})")]
    DuplicateEdge { edge: usize, i: usize, j: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("edge probability {0} is outside [0, 1]")]
    BadProbability(f64),
}

/// Undirected connected graph with a per-agent block dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyRepr", into = "TopologyRepr")]
pub struct Topology {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    block_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct TopologyRepr {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default = "one")]
    block_dim: usize,
}

fn one() -> usize {
    1
}

impl TryFrom<TopologyRepr> for Topology {
    type Error = GraphError;
    fn try_from(r: TopologyRepr) -> Result<Self, GraphError> {
        Topology::new(r.nodes, r.edges, r.block_dim)
    }
}

impl From<Topology> for TopologyRepr {
    fn from(t: Topology) -> Self {
        TopologyRepr { nodes: t.num_nodes, edges: t.edges, block_dim: t.block_dim }
    }
}

impl Topology {
    /// Validates node ranges, self-loops, duplicates (either orientation) and
    /// connectivity, in that order.
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize)>, block_dim: usize) -> Result<Self, GraphError> {
        if num_nodes < 2 {
            return Err(GraphError::TooFewNodes(num_nodes));
        }
        if block_dim == 0 {
            return Err(GraphError::ZeroBlockDim);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, &(i, j)) in edges.iter().enumerate() {
            for node in [i, j] {
                if node >= num_nodes {
                    return Err(GraphError::NodeOutOfRange { edge: k, node, num_nodes });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop { edge: k, node: i });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(GraphError::DuplicateEdge { edge: k, i, j });
            }
        }
        let components = count_components(num_nodes, &edges);
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(Topology { num_nodes, edges, block_dim })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Stacked primal dimension `Q = N * M`.
    pub fn dim(&self) -> usize {
        self.num_nodes * self.block_dim
    }

    /// Stacked dual dimension `E * M`.
    pub fn dual_dim(&self) -> usize {
        self.edges.len() * self.block_dim
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn with_block_dim(&self, block_dim: usize) -> Result<Self, GraphError> {
        Topology::new(self.num_nodes, self.edges.clone(), block_dim)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    /// Neighbors of every node, sorted ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

fn count_components(num_nodes: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); num_nodes];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; num_nodes];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..num_nodes {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    components
}

/// Connectivity of an arbitrary edge list (breadth-first search).
pub fn check_connected(num_nodes: usize, edges: &[(usize, usize)]) -> Result<bool, GraphError> {
    for (k, &(i, j)) in edges.iter().enumerate() {
        for node in [i, j] {
            if node >= num_nodes {
                return Err(GraphError::NodeOutOfRange { edge: k, node, num_nodes });
            }
        }
    }
    Ok(count_components(num_nodes, edges) <= 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Ring,
    /// Uniform random spanning tree plus each remaining pair with probability
    /// `extra_edge_prob`.
    RandomConnected {
        extra_edge_prob: f64,
    },
}

/// Generate a connected topology with block dimension 1. Edges come out sorted
/// lexicographically for random graphs and in cycle order for rings.
pub fn generate_graph(kind: GraphKind, num_nodes: usize, seed: u64) -> Result<Topology, GraphError> {
    if num_nodes < 2 {
        return Err(GraphError::TooFewNodes(num_nodes));
    }
    let edges = match kind {
        GraphKind::Ring if num_nodes == 2 => vec![(0, 1)],
        GraphKind::Ring => (0..num_nodes).map(|i| (i, (i + 1) % num_nodes)).collect(),
        GraphKind::RandomConnected { extra_edge_prob } => {
            if !(0.0..=1.0).contains(&extra_edge_prob) {
                return Err(GraphError::BadProbability(extra_edge_prob));
            }
            random_connected_edges(num_nodes, extra_edge_prob, seed)
        }
    };
    Topology::new(num_nodes, edges, 1)
}

fn random_connected_edges(n: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = rng::stream(seed, &[purpose::GRAPH]);
    let tree = prufer_tree(n, &mut rng);
    let mut present = vec![vec![false; n]; n];
    for &(i, j) in &tree {
        present[i][j] = true;
        present[j][i] = true;
    }
    let mut edges = tree;
    for i in 0..n {
        for j in i + 1..n {
            // one draw per non-tree pair keeps the stream layout independent of p
            if !present[i][j] && rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Decode a uniformly random Prüfer sequence into a labelled tree.
fn prufer_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Dense operators of a topology: incidence `A = Ã ⊗ I_M`, degree `D`, the
/// signed Laplacian `AᵀA` and the signless Laplacian `2D − AᵀA`.
#[derive(Debug, Clone)]
pub struct NetworkMatrices {
    pub incidence: DMatrix<f64>,
    /// Diagonal of `D`.
    pub degree: DVector<f64>,
    pub signed_laplacian: DMatrix<f64>,
    pub signless_laplacian: DMatrix<f64>,
    /// Smallest nonzero eigenvalue of `AᵀA`.
    pub sigma_min: f64,
    /// Spectral norm of the signless Laplacian.
    pub lplus_norm: f64,
    /// Number of zero eigenvalues of `AᵀA`.
    pub nullity: usize,
}

impl NetworkMatrices {
    pub fn degree_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degree)
    }

    pub fn dim(&self) -> usize {
        self.degree.len()
    }

    pub fn dual_dim(&self) -> usize {
        self.incidence.nrows()
    }
}

/// Scalar (`M = 1`) incidence matrix, one row per edge.
pub fn scalar_incidence(topo: &Topology) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(topo.num_edges(), topo.num_nodes());
    for (k, &(i, j)) in topo.edges().iter().enumerate() {
        a[(k, i)] = 1.0;
        a[(k, j)] = -1.0;
    }
    a
}

pub fn build_matrices(topo: &Topology) -> Result<NetworkMatrices, GraphError> {
    // re-check: a Topology can only be built connected, but the error path is
    // part of this operation's contract
    let components = count_components(topo.num_nodes(), topo.edges());
    if components != 1 {
        return Err(GraphError::Disconnected { components });
    }
    let m = topo.block_dim();
    let eye = DMatrix::<f64>::identity(m, m);
    let incidence = scalar_incidence(topo).kronecker(&eye);
    let degree = DVector::from_iterator(
        topo.dim(),
        topo.degrees().into_iter().flat_map(|d| std::iter::repeat(d as f64).take(m)),
    );
    let signed_laplacian = incidence.transpose() * &incidence;
    let signless_laplacian = DMatrix::from_diagonal(&degree) * 2.0 - &signed_laplacian;

    let (sigma_min, nullity) = smallest_nonzero_eigenvalue(&signed_laplacian);
    let lplus_norm =
        SymmetricEigen::new(signless_laplacian.clone()).eigenvalues.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));

    Ok(NetworkMatrices { incidence, degree, signed_laplacian, signless_laplacian, sigma_min, lplus_norm, nullity })
}

/// Smallest eigenvalue above the relative zero threshold, and the count of
/// eigenvalues at or below it.
pub fn smallest_nonzero_eigenvalue(sym: &DMatrix<f64>) -> (f64, usize) {
    let eig = SymmetricEigen::new(sym.clone()).eigenvalues;
    let max = eig.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));
    let threshold = ZERO_EIGEN_RTOL * max;
    let mut smallest = f64::INFINITY;
    let mut zeros = 0;
    for &e in eig.iter() {
        if e.abs() <= threshold {
            zeros += 1;
        } else if e < smallest {
            smallest = e;
        }
    }
    (smallest, zeros)
}
