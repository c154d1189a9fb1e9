//! Weighted digraphs, time-varying sequences of them, and the connectivity and
//! spectral quantities the convergence analysis depends on.
//!
//! Convention: entry `a_ij` of the adjacency matrix is the weight agent `i`
//! assigns to information flowing in from agent `j`, so the edge `(i, j)` is
//! present iff `a_ij > 0`. The Laplacian is `L = diag(A·1) − A`.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SquareMatrix;

/// Relative tolerance of the power iteration behind [`sigma_max_bound`].
pub const SIGMA_MAX_REL_TOL: f64 = 1e-10;
/// Absolute tolerance used by [`WeightedDigraph::is_weight_balanced`].
pub const BALANCE_TOL: f64 = 1e-12;
/// Default `δ̃′` for the consensus stepsize window.
pub const DEFAULT_DELTA_TILDE_PRIME: f64 = 0.84;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    NoNodes,
    #[error("adjacency has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("invalid weight {weight} on edge ({i}, {j})")]
    InvalidWeight { i: usize, j: usize, weight: f64 },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) out of range for {n} nodes")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("joint-connectivity window B must be at least 1")]
    ZeroWindow,
    #[error("empty graph sequence")]
    EmptySequence,
    #[error("graphs in a sequence must share the node count ({expected} vs {got})")]
    MixedSizes { expected: usize, got: usize },
    #[error("no edges")]
    NoEdges,
    #[error("sequence is not {0}-jointly connected")]
    NotJointlyConnected(usize),
    #[error("infeasible stepsize window [{lo}, {hi}]")]
    InfeasibleStepsizeWindow { lo: f64, hi: f64 },
    #[error("invalid stepsize-window parameters: {0}")]
    InvalidWindowParameters(String),
    #[error("invalid small-world parameters: {0}")]
    InvalidSmallWorld(String),
    #[error("could not generate a connected small-world graph in {0} attempts")]
    SmallWorldDisconnected(usize),
}

/// A weighted digraph on `n` nodes with nonnegative weights and no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct WeightedDigraph {
    n: usize,
    adjacency: Vec<f64>,
    out_lists: Vec<Vec<(usize, f64)>>,
}

impl WeightedDigraph {
    /// Builds a digraph from a row-major `n × n` adjacency matrix.
    pub fn new(n: usize, adjacency: Vec<f64>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoNodes);
        }
        if adjacency.len() != n * n {
            return Err(GraphError::BadShape {
                expected: n * n,
                got: adjacency.len(),
            });
        }
        let mut out_lists = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let weight = adjacency[i * n + j];
                if !weight.is_finite() || weight < 0.0 {
                    return Err(GraphError::InvalidWeight { i, j, weight });
                }
                if i == j {
                    if weight != 0.0 {
                        return Err(GraphError::SelfLoop(i));
                    }
                    continue;
                }
                if weight > 0.0 {
                    out_lists[i].push((j, weight));
                }
            }
        }
        Ok(WeightedDigraph {
            n,
            adjacency,
            out_lists,
        })
    }

    /// Builds a digraph from `(i, j, a_ij)` triples. Repeated edges add up.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoNodes);
        }
        let mut adjacency = vec![0.0; n * n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GraphError::OutOfRange { i, j, n });
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            adjacency[i * n + j] += w;
        }
        Self::new(n, adjacency)
    }

    /// Symmetric graph with weight `w` on both directions of every listed pair.
    pub fn undirected(n: usize, pairs: &[(usize, usize)], w: f64) -> Result<Self, GraphError> {
        let edges: Vec<_> = pairs
            .iter()
            .flat_map(|&(i, j)| [(i, j, w), (j, i, w)])
            .collect();
        Self::from_edges(n, &edges)
    }

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::new(n, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.n + j]
    }

    /// Out-neighbors `j` of `i` (those with `a_ij > 0`) and their weights.
    pub fn out_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.out_lists[i]
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.out_lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&(j, w)| (i, j, w)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.out_lists.iter().map(Vec::len).sum()
    }

    pub fn out_degree(&self, i: usize) -> f64 {
        self.out_lists[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        (0..self.n).map(|k| self.weight(k, i)).sum()
    }

    pub fn min_positive_weight(&self) -> Option<f64> {
        self.out_lists
            .iter()
            .flatten()
            .map(|&(_, w)| w)
            .min_by(f64::total_cmp)
    }

    pub fn max_out_degree(&self) -> f64 {
        (0..self.n).map(|i| self.out_degree(i)).fold(0.0, f64::max)
    }

    pub fn laplacian(&self) -> SquareMatrix {
        laplacian(self)
    }

    /// `y = (L ⊗ I_d) x` for `x` made of `n` stacked blocks of size `d`.
    pub fn apply_laplacian(&self, x: &[f64], d: usize) -> Vec<f64> {
        assert_eq!(x.len(), self.n * d, "stacked vector has wrong length");
        let mut y = vec![0.0; x.len()];
        for i in 0..self.n {
            let xi = &x[i * d..(i + 1) * d];
            let yi = &mut y[i * d..(i + 1) * d];
            for &(j, a) in &self.out_lists[i] {
                let xj = &x[j * d..(j + 1) * d];
                for k in 0..d {
                    yi[k] += a * (xi[k] - xj[k]);
                }
            }
        }
        y
    }

    /// Out-degree equals in-degree at every node, within [`BALANCE_TOL`].
    pub fn is_weight_balanced(&self) -> bool {
        self.laplacian()
            .col_sums()
            .iter()
            .all(|s| s.abs() <= BALANCE_TOL)
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let forward = reachable_from(0, self.n, |i| {
            self.out_lists[i].iter().map(|&(j, _)| j).collect()
        });
        if forward.len() != self.n {
            return false;
        }
        let mut reverse_lists = vec![Vec::new(); self.n];
        for (i, l) in self.out_lists.iter().enumerate() {
            for &(j, _) in l {
                reverse_lists[j].push(i);
            }
        }
        reachable_from(0, self.n, |i| reverse_lists[i].clone()).len() == self.n
    }

    /// Union graph: adjacency matrices add up.
    pub fn union(&self, other: &WeightedDigraph) -> Result<WeightedDigraph, GraphError> {
        if self.n != other.n {
            return Err(GraphError::MixedSizes {
                expected: self.n,
                got: other.n,
            });
        }
        let adjacency = self
            .adjacency
            .iter()
            .zip(&other.adjacency)
            .map(|(a, b)| a + b)
            .collect();
        WeightedDigraph::new(self.n, adjacency)
    }
}

fn reachable_from(start: usize, n: usize, next: impl Fn(usize) -> Vec<usize>) -> HashSet<usize> {
    let mut seen = HashSet::with_capacity(n);
    let mut queue = VecDeque::new();
    seen.insert(start);
    queue.push_back(start);
    while let Some(i) = queue.pop_front() {
        for j in next(i) {
            if seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    seen
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphJson> for WeightedDigraph {
    type Error = GraphError;
    fn try_from(g: GraphJson) -> Result<Self, GraphError> {
        WeightedDigraph::from_edges(g.n, &g.edges)
    }
}

impl From<WeightedDigraph> for GraphJson {
    fn from(g: WeightedDigraph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges(),
        }
    }
}

/// `diag(A·1) − A`.
pub fn laplacian(g: &WeightedDigraph) -> SquareMatrix {
    let n = g.n();
    let mut l = SquareMatrix::zeros(n);
    for i in 0..n {
        let mut diag = 0.0;
        for &(j, a) in g.out_neighbors(i) {
            l.set(i, j, -a);
            diag += a;
        }
        l.set(i, i, diag);
    }
    l
}

pub fn is_weight_balanced(g: &WeightedDigraph) -> bool {
    g.is_weight_balanced()
}

/// Checks that the union over every block `[kB, (k+1)B − 1]`, `k ≥ 1`, of the
/// periodically extended sequence (1-based time) is strongly connected.
pub fn check_joint_connectivity(seq: &[WeightedDigraph], b: usize) -> Result<bool, GraphError> {
    if b == 0 {
        return Err(GraphError::ZeroWindow);
    }
    if seq.is_empty() {
        return Err(GraphError::EmptySequence);
    }
    let period = seq.len();
    let blocks = lcm(period, b) / b;
    for k in 1..=blocks {
        let start = k * b;
        let mut union = seq[(start - 1) % period].clone();
        for t in start + 1..start + b {
            union = union.union(&seq[(t - 1) % period])?;
        }
        if !union.is_strongly_connected() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Smallest positive weight in the sequence. Any valid nondegeneracy constant
/// must lie strictly below it.
pub fn nondegeneracy_delta(seq: &[WeightedDigraph]) -> Result<f64, GraphError> {
    seq.iter()
        .filter_map(WeightedDigraph::min_positive_weight)
        .min_by(f64::total_cmp)
        .ok_or(GraphError::NoEdges)
}

/// Largest weighted out-degree over the sequence.
pub fn max_out_degree(seq: &[WeightedDigraph]) -> Result<f64, GraphError> {
    if seq.iter().all(|g| g.edge_count() == 0) {
        return Err(GraphError::NoEdges);
    }
    Ok(seq.iter().map(|g| g.max_out_degree()).fold(0.0, f64::max))
}

/// `max_t σ_max(L_t)` by power iteration on `LᵀL`.
pub fn sigma_max_bound(seq: &[WeightedDigraph]) -> Result<f64, GraphError> {
    if seq.iter().all(|g| g.edge_count() == 0) {
        return Err(GraphError::NoEdges);
    }
    Ok(seq
        .iter()
        .map(|g| {
            g.laplacian()
                .max_singular_value(SIGMA_MAX_REL_TOL, 1_000_000)
        })
        .fold(0.0, f64::max))
}

/// Admissible consensus stepsizes `[δ̃/δ, (1 − δ̃)/d_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepsizeWindow {
    pub delta_tilde: f64,
    pub lo: f64,
    pub hi: f64,
}

impl StepsizeWindow {
    pub fn contains(&self, sigma: f64) -> bool {
        sigma >= self.lo && sigma <= self.hi
    }
}

pub fn consensus_stepsize_interval(
    delta: f64,
    d_max: f64,
    delta_tilde_prime: f64,
) -> Result<StepsizeWindow, GraphError> {
    if !(delta > 0.0 && delta <= d_max && d_max.is_finite()) {
        return Err(GraphError::InvalidWindowParameters(format!(
            "need 0 < delta <= d_max, got delta={delta}, d_max={d_max}"
        )));
    }
    if !(delta_tilde_prime > 0.0 && delta_tilde_prime < 1.0) {
        return Err(GraphError::InvalidWindowParameters(format!(
            "delta_tilde_prime must lie in (0, 1), got {delta_tilde_prime}"
        )));
    }
    let delta_tilde = delta_tilde_prime.min((1.0 - delta_tilde_prime) * delta / d_max);
    let lo = delta_tilde / delta;
    let hi = (1.0 - delta_tilde) / d_max;
    if lo > hi {
        return Err(GraphError::InfeasibleStepsizeWindow { lo, hi });
    }
    Ok(StepsizeWindow {
        delta_tilde,
        lo,
        hi,
    })
}

/// Connected small-world graph on `n` nodes: a ring lattice where each node
/// links to its `k/2` neighbors on either side, with every lattice edge
/// rewired with probability `p`.
///
/// Rewiring is a double-edge swap (`(u, v), (x, y) → (u, y), (x, v)`), so every
/// node keeps degree `k`. Edge weights are `1 / (realized max degree)` in both
/// directions, which makes the graph weight-balanced with unit maximum
/// weighted out-degree. Disconnected draws are discarded and redrawn from the
/// same RNG stream.
pub fn watts_strogatz(
    n: usize,
    k: usize,
    p: f64,
    seed: u64,
) -> Result<WeightedDigraph, GraphError> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(GraphError::InvalidSmallWorld(format!(
            "k must be even and >= 2, got {k}"
        )));
    }
    if n <= k {
        return Err(GraphError::InvalidSmallWorld(format!(
            "need n > k, got n={n}, k={k}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidSmallWorld(format!(
            "p must lie in [0, 1], got {p}"
        )));
    }
    const MAX_ATTEMPTS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let pairs = rewired_lattice(n, k, p, &mut rng);
        let mut degree = vec![0usize; n];
        for &(a, b) in &pairs {
            degree[a] += 1;
            degree[b] += 1;
        }
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        let g = WeightedDigraph::undirected(n, &pairs, 1.0 / max_degree as f64)?;
        if g.is_strongly_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::SmallWorldDisconnected(MAX_ATTEMPTS))
}

fn rewired_lattice(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * k / 2);
    for u in 0..n {
        for j in 1..=k / 2 {
            edges.push((u, (u + j) % n));
        }
    }
    let mut index: HashMap<(usize, usize), usize> = edges
        .iter()
        .enumerate()
        .map(|(idx, &(a, b))| (key(a, b), idx))
        .collect();
    if p == 0.0 {
        return edges;
    }
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p {
                continue;
            }
            let Some(&e1) = index.get(&key(u, v)) else {
                continue;
            };
            for _ in 0..32 {
                let e2 = rng.random_range(0..edges.len());
                if e2 == e1 {
                    continue;
                }
                let (mut x, mut y) = edges[e2];
                if rng.random::<bool>() {
                    std::mem::swap(&mut x, &mut y);
                }
                if u == y
                    || x == v
                    || index.contains_key(&key(u, y))
                    || index.contains_key(&key(x, v))
                {
                    continue;
                }
                index.remove(&key(u, v));
                index.remove(&key(x, y));
                edges[e1] = (u, y);
                edges[e2] = (x, v);
                index.insert(key(u, y), e1);
                index.insert(key(x, v), e2);
                break;
            }
        }
    }
    edges
}

/// A time-varying graph sequence, extended periodically over the horizon,
/// together with the constants the analysis uses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigraphSequence {
    graphs: Vec<WeightedDigraph>,
    #[serde(rename = "B")]
    b: usize,
    delta: f64,
    d_max: f64,
    lambda_bar: f64,
    weight_balanced: bool,
}

impl DigraphSequence {
    /// Validates node counts and `B`-joint connectivity and computes `δ`,
    /// `d_max` and `Λ̄`.
    pub fn new(graphs: Vec<WeightedDigraph>, b: usize) -> Result<Self, GraphError> {
        if b == 0 {
            return Err(GraphError::ZeroWindow);
        }
        let first = graphs.first().ok_or(GraphError::EmptySequence)?;
        let n = first.n();
        if let Some(g) = graphs.iter().find(|g| g.n() != n) {
            return Err(GraphError::MixedSizes {
                expected: n,
                got: g.n(),
            });
        }
        let (delta, d_max, lambda_bar) = if n == 1 {
            // A single agent has no neighbors; consensus terms vanish.
            (1.0, 1.0, 0.0)
        } else {
            if !check_joint_connectivity(&graphs, b)? {
                return Err(GraphError::NotJointlyConnected(b));
            }
            (
                nondegeneracy_delta(&graphs)?,
                max_out_degree(&graphs)?,
                sigma_max_bound(&graphs)?,
            )
        };
        let weight_balanced = graphs.iter().all(WeightedDigraph::is_weight_balanced);
        Ok(DigraphSequence {
            graphs,
            b,
            delta,
            d_max,
            lambda_bar,
            weight_balanced,
        })
    }

    pub fn fixed(g: WeightedDigraph) -> Result<Self, GraphError> {
        Self::new(vec![g], 1)
    }

    pub fn n(&self) -> usize {
        self.graphs[0].n()
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Smallest positive weight (the supremum of admissible `δ`).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn is_weight_balanced(&self) -> bool {
        self.weight_balanced
    }

    pub fn graphs(&self) -> &[WeightedDigraph] {
        &self.graphs
    }

    pub fn period(&self) -> usize {
        self.graphs.len()
    }

    /// Graph active at 1-based time `t`.
    pub fn at(&self, t: usize) -> &WeightedDigraph {
        assert!(t >= 1, "time is 1-based");
        &self.graphs[(t - 1) % self.graphs.len()]
    }

    pub fn stepsize_window(&self, delta_tilde_prime: f64) -> Result<StepsizeWindow, GraphError> {
        consensus_stepsize_interval(self.delta, self.d_max, delta_tilde_prime)
    }
}

#[derive(Deserialize)]
struct SequenceJson {
    #[serde(rename = "B")]
    b: usize,
    graphs: Vec<WeightedDigraph>,
}

impl<'de> Deserialize<'de> for DigraphSequence {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = SequenceJson::deserialize(de)?;
        DigraphSequence::new(raw.graphs, raw.b).map_err(serde::de::Error::custom)
    }
}
