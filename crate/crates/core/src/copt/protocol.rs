//! Distributed computation of a radius bounding the optimal dual set.
//!
//! Stage (i): every agent computes its Slater component `w̃^i`, the value
//! `f^i(w̃^i)` and the local dual value `q^i(z̄)`. Stage (ii): Laplacian
//! consensus on `y^i(0) = g^i(w̃^i)` runs together with a tracker of the
//! average sign until the tracker certifies that every estimate is negative;
//! then a finite-time agreement fixes `ŷ` and `γ_lower = min_l −ŷ_l`. Stage
//! (iii): finite-time agreement on `max_j f^j(w̃^j)` and `min_j q^j(z̄)`.
//!
//! Two changes keep the bound sound on finite runs. The tracker uses the
//! change in each agent's own sign as input (dynamic average tracking), so its
//! network sum always equals the current number of positive minus negative
//! estimates. And the agreed `ŷ` is the network *maximum* of `N y^i`, which is
//! an upper bound on `Σ_i g^i(w̃^i)` whenever consensus preserves the mean.

use serde::{Deserialize, Serialize};

use super::problem::{slater_components, SeparableProblem};
use super::CoptError;
use crate::dynamics::check_sigma;
use crate::graph::{DigraphSequence, WeightedDigraph, DEFAULT_DELTA_TILDE_PRIME};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    /// Common dual point `z̄`; zeros when absent.
    pub z_bar: Option<Vec<f64>>,
    /// Cap on consensus rounds.
    pub max_rounds: usize,
    /// `γ_lower` is multiplied by this factor in `(0, 1]`.
    pub safety_factor: f64,
    /// Agreement phases allowed to find a nonnegative `ŷ` before giving up.
    pub max_restarts: usize,
    pub delta_tilde_prime: f64,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            z_bar: None,
            max_rounds: 1_000_000,
            safety_factor: 0.99,
            max_restarts: 1000,
            delta_tilde_prime: DEFAULT_DELTA_TILDE_PRIME,
        }
    }
}

/// Everything the protocol computed, per agent where agents hold their own
/// copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBoundRun {
    pub slater: Vec<Vec<f64>>,
    pub z_bar: Vec<f64>,
    pub y0: Vec<Vec<f64>>,
    pub f_slater: Vec<f64>,
    pub q_local: Vec<f64>,
    /// First consensus round at which each agent's termination test held.
    pub k_star: Vec<usize>,
    pub k_star_star: usize,
    /// Consensus rounds completed before the accepted agreement phase.
    pub agreement_start: usize,
    /// Consensus estimates `y^i` entering the accepted agreement phase.
    pub consensus_state: Vec<Vec<f64>>,
    pub y_hat: Vec<Vec<f64>>,
    pub gamma_lower: Vec<f64>,
    pub f_max: Vec<f64>,
    pub q_min: Vec<f64>,
    pub r: Vec<f64>,
    /// Agreement phases that ended with a nonnegative coordinate of `ŷ`.
    pub restarts: usize,
    /// Largest number of rounds any agreement phase needed before every agent
    /// held the same value.
    pub agreement_rounds_used: usize,
    pub rounds_total: usize,
}

impl DualBoundRun {
    pub fn radius(&self) -> f64 {
        self.r[0]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_lower[0]
    }

    /// Whether all agents hold bitwise identical `ŷ`, `γ_lower` and `r`.
    pub fn agents_agree(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|x| x.to_bits() == v[0].to_bits());
        same(&self.r)
            && same(&self.gamma_lower)
            && self.y_hat.iter().all(|y| {
                y.iter()
                    .zip(&self.y_hat[0])
                    .all(|(a, b)| a.to_bits() == b.to_bits())
            })
    }
}

fn agreement_round(
    values: &[Vec<f64>],
    graph: &WeightedDigraph,
    pick: fn(f64, f64) -> f64,
) -> Vec<Vec<f64>> {
    (0..values.len())
        .map(|i| {
            let mut v = values[i].clone();
            for &(j, _) in graph.out_neighbors(i) {
                for (a, b) in v.iter_mut().zip(&values[j]) {
                    *a = pick(*a, *b);
                }
            }
            v
        })
        .collect()
}

/// Every agent takes the coordinatewise minimum over itself and its
/// out-neighbors.
pub fn min_agreement_round(values: &[Vec<f64>], graph: &WeightedDigraph) -> Vec<Vec<f64>> {
    agreement_round(values, graph, f64::min)
}

/// Coordinatewise maximum over itself and its out-neighbors.
pub fn max_agreement_round(values: &[Vec<f64>], graph: &WeightedDigraph) -> Vec<Vec<f64>> {
    agreement_round(values, graph, f64::max)
}

fn all_equal(values: &[Vec<f64>]) -> bool {
    values.iter().all(|v| v == &values[0])
}

/// `−1` when every coordinate is negative, `+1` otherwise.
fn sign(y: &[f64]) -> f64 {
    if y.iter().all(|v| *v < 0.0) {
        -1.0
    } else {
        1.0
    }
}

fn laplacian_mix(x: &[f64], graph: &WeightedDigraph, sigma: f64, i: usize) -> f64 {
    graph
        .out_neighbors(i)
        .iter()
        .map(|&(j, a)| a * (x[j] - x[i]))
        .sum::<f64>()
        * sigma
}

struct Consensus<'a> {
    graphs: &'a DigraphSequence,
    sigma: f64,
    y: Vec<Vec<f64>>,
    s: Vec<f64>,
    signs: Vec<f64>,
    rounds: usize,
}

impl Consensus<'_> {
    /// One synchronous round using the graph at time `rounds + 1`.
    fn round(&mut self) {
        self.rounds += 1;
        let g = self.graphs.at(self.rounds);
        let n = self.y.len();
        let m = self.y[0].len();
        let mut y = self.y.clone();
        for l in 0..m {
            let col: Vec<f64> = self.y.iter().map(|v| v[l]).collect();
            for i in 0..n {
                y[i][l] = col[i] + laplacian_mix(&col, g, self.sigma, i);
            }
        }
        let signs: Vec<f64> = y.iter().map(|v| sign(v)).collect();
        let s: Vec<f64> = (0..n)
            .map(|i| {
                self.s[i] + laplacian_mix(&self.s, g, self.sigma, i) + signs[i] - self.signs[i]
            })
            .collect();
        self.y = y;
        self.s = s;
        self.signs = signs;
    }
}

/// One synchronous round of min- or max-agreement.
type AgreementRound = fn(&[Vec<f64>], &WeightedDigraph) -> Vec<Vec<f64>>;

/// Runs a finite-time agreement for `(N − 1)B` rounds starting after time
/// `start`. Returns the final values and the rounds needed to agree.
fn agree(
    graphs: &DigraphSequence,
    start: usize,
    mut values: Vec<Vec<f64>>,
    pick: AgreementRound,
) -> (Vec<Vec<f64>>, usize) {
    let rounds = (values.len() - 1) * graphs.b();
    let mut used = if all_equal(&values) { 0 } else { usize::MAX };
    for k in 1..=rounds {
        values = pick(&values, graphs.at(start + k));
        if used == usize::MAX && all_equal(&values) {
            used = k;
        }
    }
    (values, used)
}

/// Runs the three stages over `graphs` with consensus stepsize `sigma`.
pub fn run_dual_bound_protocol(
    sep: &SeparableProblem,
    graphs: &DigraphSequence,
    sigma: f64,
    opts: &ProtocolOptions,
) -> Result<DualBoundRun, CoptError> {
    let n = sep.n_agents();
    let m = sep.m();
    if graphs.n() != n {
        return Err(CoptError::Invalid(format!(
            "graph has {} nodes, problem has {n} agents",
            graphs.n()
        )));
    }
    if !graphs.is_weight_balanced() {
        return Err(CoptError::Invalid(
            "protocol requires weight-balanced graphs".into(),
        ));
    }
    if !(opts.safety_factor > 0.0 && opts.safety_factor <= 1.0) {
        return Err(CoptError::Invalid(format!(
            "safety factor must lie in (0, 1], got {}",
            opts.safety_factor
        )));
    }
    check_sigma(graphs, sigma, opts.delta_tilde_prime, true)?;
    let z_bar = opts.z_bar.clone().unwrap_or_else(|| vec![0.0; m]);
    if z_bar.len() != m || z_bar.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(CoptError::Invalid(format!(
            "z_bar must be a nonnegative vector of length {m}"
        )));
    }

    // Stage (i).
    let slater = slater_components(sep)?;
    let y0: Vec<Vec<f64>> = (0..n)
        .map(|i| sep.constraints_at(i, &slater[i], &[]))
        .collect();
    let f_slater: Vec<f64> = (0..n)
        .map(|i| sep.objective_at(i, &slater[i], &[]))
        .collect();
    let mut q_local = Vec::with_capacity(n);
    for i in 0..n {
        q_local.push(sep.minimize_local(i, 1.0, &z_bar)?.1);
    }

    // Stage (ii).
    let signs: Vec<f64> = y0.iter().map(|v| sign(v)).collect();
    let mut c = Consensus {
        graphs,
        sigma,
        y: y0.clone(),
        s: signs.clone(),
        signs,
        rounds: 0,
    };
    let nf = n as f64;
    let threshold = -(nf - 1.0);
    let b = graphs.b();
    let mut restarts = 0;
    let mut agreement_rounds_used = 0;
    let mut clock = 0; // rounds of any kind, drives the graph sequence
    let (k_star, k_star_star, agreement_start, consensus_state, y_hat) = loop {
        let mut k_star: Vec<Option<usize>> = vec![None; n];
        loop {
            for i in 0..n {
                if k_star[i].is_none() && nf * c.s[i] <= threshold {
                    k_star[i] = Some(c.rounds);
                }
            }
            if k_star.iter().all(Option::is_some) {
                break;
            }
            if c.rounds >= opts.max_rounds {
                let pending = k_star.iter().filter(|k| k.is_none()).count();
                return Err(CoptError::ProtocolNonTermination {
                    rounds: c.rounds,
                    diagnostic: format!(
                        "{pending} agents still waiting; sign trackers range over [{:.3e}, {:.3e}]",
                        c.s.iter().copied().fold(f64::INFINITY, f64::min),
                        c.s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    ),
                });
            }
            c.round();
            clock += 1;
        }
        let k_star: Vec<usize> = k_star.into_iter().map(Option::unwrap).collect();
        let k_ss = *k_star.iter().max().expect("n >= 1");
        // Keep relaying until the agreement phase starts on a block boundary.
        while (clock + 1) % b != 0 {
            c.round();
            clock += 1;
        }
        let start = clock;
        let scaled: Vec<Vec<f64>> =
            c.y.iter()
                .map(|v| v.iter().map(|x| nf * x).collect())
                .collect();
        let (agreed, used) = agree(graphs, start, scaled, max_agreement_round);
        agreement_rounds_used = agreement_rounds_used.max(used);
        clock += (n - 1) * b;
        if agreed[0].iter().all(|v| *v < 0.0) {
            break (k_star, k_ss, start, c.y.clone(), agreed);
        }
        restarts += 1;
        if restarts > opts.max_restarts {
            let worst = agreed[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Err(CoptError::NonPositiveGamma(-worst * opts.safety_factor));
        }
        // Resume consensus where it stopped, on the current graph clock.
        while c.rounds < clock {
            c.round();
        }
    };

    let gamma_lower: Vec<f64> = y_hat
        .iter()
        .map(|v| opts.safety_factor * v.iter().map(|x| -x).fold(f64::INFINITY, f64::min))
        .collect();
    if gamma_lower.iter().any(|g| !(*g > 0.0)) {
        return Err(CoptError::NonPositiveGamma(gamma_lower[0]));
    }

    // Stage (iii).
    let (f_max, used_f) = agree(
        graphs,
        clock,
        f_slater.iter().map(|v| vec![*v]).collect(),
        max_agreement_round,
    );
    let (q_min, used_q) = agree(
        graphs,
        clock,
        q_local.iter().map(|v| vec![*v]).collect(),
        min_agreement_round,
    );
    clock += (n - 1) * b;
    agreement_rounds_used = agreement_rounds_used.max(used_f).max(used_q);
    let f_max: Vec<f64> = f_max.into_iter().map(|v| v[0]).collect();
    let q_min: Vec<f64> = q_min.into_iter().map(|v| v[0]).collect();
    let r: Vec<f64> = (0..n)
        .map(|i| nf * (f_max[i] - q_min[i]) / gamma_lower[i])
        .collect();

    Ok(DualBoundRun {
        slater,
        z_bar,
        y0,
        f_slater,
        q_local,
        k_star,
        k_star_star,
        agreement_start,
        consensus_state,
        y_hat,
        gamma_lower,
        f_max,
        q_min,
        r,
        restarts,
        agreement_rounds_used,
        rounds_total: clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copt::functions::CoordinateFn;
    use crate::copt::problem::AgentSpec;
    use crate::projection::ConvexSet;

    fn log_problem(c: &[f64], d: &[f64], b: f64) -> SeparableProblem {
        let n = c.len() as f64;
        let agents = c
            .iter()
            .zip(d)
            .map(|(ci, di)| AgentSpec {
                dim: 1,
                set: ConvexSet::unit_box(1),
                objective: CoordinateFn::linear(vec![*ci], 0.0),
                constraints: vec![CoordinateFn::neg_log(vec![*di], b / n)],
            })
            .collect();
        SeparableProblem::new(agents, 0, ConvexSet::FullSpace).unwrap()
    }

    #[test]
    fn min_agreement_examples() {
        let path = WeightedDigraph::undirected(3, &[(0, 1), (1, 2)], 1.0).unwrap();
        let v = vec![vec![3.0], vec![1.0], vec![2.0]];
        let once = min_agreement_round(&v, &path);
        assert_eq!(once, vec![vec![1.0], vec![1.0], vec![1.0]]);
        let same = vec![vec![2.0]; 3];
        assert_eq!(min_agreement_round(&same, &path), same);
        let complete = WeightedDigraph::undirected(3, &[(0, 1), (1, 2), (0, 2)], 1.0).unwrap();
        let v = vec![vec![5.0, 0.0], vec![4.0, 9.0], vec![7.0, -1.0]];
        assert!(min_agreement_round(&v, &complete)
            .iter()
            .all(|x| x == &vec![4.0, -1.0]));
    }

    #[test]
    fn immediate_termination_when_all_negative() {
        let sep = log_problem(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], 0.3);
        let graphs =
            DigraphSequence::fixed(WeightedDigraph::undirected(3, &[(0, 1), (1, 2)], 0.5).unwrap())
                .unwrap();
        let w = graphs.stepsize_window(0.5).unwrap();
        let opts = ProtocolOptions {
            delta_tilde_prime: 0.5,
            ..Default::default()
        };
        let run = run_dual_bound_protocol(&sep, &graphs, w.hi, &opts).unwrap();
        assert_eq!(run.k_star, vec![0, 0, 0]);
        assert!(run.agents_agree());
        assert_eq!(run.restarts, 0);
    }

    #[test]
    fn two_agent_radius_is_conservative() {
        let sep = log_problem(&[1.0, 1.0], &[1.0, 1.0], 0.2);
        let graphs =
            DigraphSequence::fixed(WeightedDigraph::undirected(2, &[(0, 1)], 1.0).unwrap())
                .unwrap();
        let opts = ProtocolOptions {
            delta_tilde_prime: 0.5,
            ..Default::default()
        };
        let run = run_dual_bound_protocol(&sep, &graphs, 0.5, &opts).unwrap();
        assert_eq!(run.f_max[0], 1.0);
        assert_eq!(run.q_min[0], 0.0);
        let exact = 2.0 / (2.0 * 2f64.ln() - 0.2);
        assert!(run.radius() >= exact);
        assert!(run.radius() <= exact / 0.99 + 1e-12);
    }

    #[test]
    fn mixed_signs_terminate_after_consensus() {
        // Agent 0 alone cannot satisfy the constraint; the sum can.
        let sep = SeparableProblem::new(
            vec![
                AgentSpec {
                    dim: 1,
                    set: ConvexSet::unit_box(1),
                    objective: CoordinateFn::linear(vec![1.0], 0.0),
                    constraints: vec![CoordinateFn::neg_log(vec![0.05], 0.4)],
                },
                AgentSpec {
                    dim: 1,
                    set: ConvexSet::unit_box(1),
                    objective: CoordinateFn::linear(vec![1.0], 0.0),
                    constraints: vec![CoordinateFn::neg_log(vec![1.0], 0.0)],
                },
            ],
            0,
            ConvexSet::FullSpace,
        )
        .unwrap();
        let graphs =
            DigraphSequence::fixed(WeightedDigraph::undirected(2, &[(0, 1)], 1.0).unwrap())
                .unwrap();
        let opts = ProtocolOptions {
            delta_tilde_prime: 0.5,
            ..Default::default()
        };
        let run = run_dual_bound_protocol(&sep, &graphs, 0.5, &opts).unwrap();
        assert_eq!(run.k_star[1], 0);
        assert!(run.k_star[0] >= 1);
        assert_eq!(run.k_star_star, run.k_star[0]);
        assert!(run.agents_agree());
        let exact = crate::copt::exact_radius(&sep, &[0.0]).unwrap();
        assert!(run.radius() >= exact);
    }
}
