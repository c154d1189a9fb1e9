#![allow(dead_code)]

use consensus_saddle::graph::{DigraphSequence, WeightedDigraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `B`-jointly connected sequence of weight-balanced digraphs on `n`
/// nodes: the edges of a random undirected spanning tree are scattered over
/// the `b` graphs, and each graph may also get a directed cycle on a random
/// subset of nodes.
pub fn random_balanced_sequence(n: usize, b: usize, rng: &mut ChaCha8Rng) -> DigraphSequence {
    let mut edges: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); b];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        let w = rng.random_range(0.2..1.0);
        let g = rng.random_range(0..b);
        edges[g].push((parent, child, w));
        edges[g].push((child, parent, w));
    }
    for g in edges.iter_mut() {
        if n >= 3 && rng.random_bool(0.5) {
            let len = rng.random_range(3..=n);
            let mut nodes: Vec<usize> = (0..n).collect();
            nodes.shuffle(rng);
            let w = rng.random_range(0.2..1.0);
            for k in 0..len {
                g.push((nodes[k], nodes[(k + 1) % len], w));
            }
        }
    }
    let graphs = edges
        .into_iter()
        .map(|e| WeightedDigraph::from_edges(n, &e).unwrap())
        .collect();
    DigraphSequence::new(graphs, b).unwrap()
}

/// Boolean reachability by Warshall's algorithm on `adj` (row `i` lists the
/// nodes `i` receives from).
pub fn transitive_closure(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r = adj.to_vec();
    for i in 0..n {
        r[i][i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

pub fn all_equal(v: &[f64], tol: f64) -> bool {
    v.iter().all(|x| (x - v[0]).abs() <= tol)
}
