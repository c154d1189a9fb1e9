//! Projected saddle-point subgradient dynamics with Laplacian averaging.
//!
//! The state has four blocks: `w` (convex, no agreement), `D` (convex, one
//! copy per agent, driven to agreement), `μ` (concave, no agreement) and `z`
//! (concave, one copy per agent, driven to agreement). One step reads
//!
//! ```text
//! ŵ = w − η g_w
//! D̂ = D − σ (L_t ⊗ I) D − η g_D
//! μ̂ = μ + η g_μ
//! ẑ = z − σ (L_t ⊗ I) z + η g_z
//! ```
//!
//! followed by projection of every block onto its set. All four subgradients
//! are evaluated at the pre-step state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DigraphSequence, GraphError, WeightedDigraph, DEFAULT_DELTA_TILDE_PRIME};
use crate::linalg::{all_finite, norm, norm_sq};
use crate::projection::{ConvexSet, ProjectionError};

/// Distance tolerance used for feasibility checks of states.
pub const FEASIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("oracle returned non-finite value in block {block}")]
    NonFinite { block: &'static str },
    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<DynamicsError>,
    },
    #[error("learning-rate index must be >= 1, got {0}")]
    BadRateIndex(usize),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("horizon T must be >= 1")]
    ZeroHorizon,
    #[error("stride must be >= 1")]
    ZeroStride,
    #[error("consensus stepsize {sigma} outside the admissible window [{lo}, {hi}]")]
    SigmaOutsideWindow { sigma: f64, lo: f64, hi: f64 },
    #[error("block `{block}` has length {got}, expected {expected}")]
    Shape {
        block: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("graph has {got} nodes but the problem has {expected} agents")]
    AgentMismatch { expected: usize, got: usize },
    #[error("initial state is not feasible (block {0})")]
    InfeasibleInitial(&'static str),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Sizes of the four blocks; `d` and `z` are per-agent copy sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDims {
    pub agents: usize,
    pub w: usize,
    pub d: usize,
    pub mu: usize,
    pub z: usize,
}

/// One value per block; used for states, subgradients and averages alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blocks {
    pub w: Vec<f64>,
    pub d: Vec<f64>,
    pub mu: Vec<f64>,
    pub z: Vec<f64>,
}

impl Blocks {
    pub fn zeros(dims: &BlockDims) -> Blocks {
        Blocks {
            w: vec![0.0; dims.w],
            d: vec![0.0; dims.agents * dims.d],
            mu: vec![0.0; dims.mu],
            z: vec![0.0; dims.agents * dims.z],
        }
    }

    pub fn check_dims(&self, dims: &BlockDims) -> Result<(), DynamicsError> {
        let expect = [
            ("w", dims.w, self.w.len()),
            ("D", dims.agents * dims.d, self.d.len()),
            ("mu", dims.mu, self.mu.len()),
            ("z", dims.agents * dims.z, self.z.len()),
        ];
        for (block, expected, got) in expect {
            if expected != got {
                return Err(DynamicsError::Shape {
                    block,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<(), DynamicsError> {
        for (block, v) in self.named() {
            if !all_finite(v) {
                return Err(DynamicsError::NonFinite { block });
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, &Vec<f64>); 4] {
        [
            ("w", &self.w),
            ("D", &self.d),
            ("mu", &self.mu),
            ("z", &self.z),
        ]
    }

    /// Euclidean norms of the four blocks.
    pub fn norms(&self) -> [f64; 4] {
        [norm(&self.w), norm(&self.d), norm(&self.mu), norm(&self.z)]
    }

    fn zip_with(&self, other: &Blocks, f: impl Fn(f64, f64) -> f64) -> Blocks {
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Blocks {
            w: zip(&self.w, &other.w),
            d: zip(&self.d, &other.d),
            mu: zip(&self.mu, &other.mu),
            z: zip(&self.z, &other.z),
        }
    }
}

/// Value and subgradient oracles of a convex-concave function
/// `φ(w, D, μ, z)`.
///
/// `subgradients` returns `(g_w, g_D, g_μ, g_z)`: subgradients in the convex
/// blocks and supergradients (subgradients of the concave function) in the
/// concave blocks.
pub trait SaddleOracle: Send + Sync {
    fn value(&self, p: &Blocks) -> f64;
    fn subgradients(&self, p: &Blocks) -> Blocks;
}

/// Constraint sets. `d` and `z` apply to each agent copy separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSets {
    pub w: ConvexSet,
    pub d: ConvexSet,
    pub mu: ConvexSet,
    pub z: ConvexSet,
}

/// A constrained saddle problem: block sizes, sets and the `φ` oracle.
#[derive(Clone)]
pub struct SaddleProblem {
    dims: BlockDims,
    sets: BlockSets,
    oracle: Arc<dyn SaddleOracle>,
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("dims", &self.dims)
            .field("sets", &self.sets)
            .finish_non_exhaustive()
    }
}

impl SaddleProblem {
    pub fn new(
        dims: BlockDims,
        sets: BlockSets,
        oracle: Arc<dyn SaddleOracle>,
    ) -> Result<Self, DynamicsError> {
        for (set, dim) in [
            (&sets.w, dims.w),
            (&sets.d, dims.d),
            (&sets.mu, dims.mu),
            (&sets.z, dims.z),
        ] {
            set.validate()?;
            if let Some(expected) = set.fixed_dim() {
                if expected != dim {
                    return Err(ProjectionError::DimensionMismatch { expected, got: dim }.into());
                }
            }
        }
        Ok(SaddleProblem { dims, sets, oracle })
    }

    pub fn dims(&self) -> BlockDims {
        self.dims
    }

    pub fn sets(&self) -> &BlockSets {
        &self.sets
    }

    pub fn oracle(&self) -> &Arc<dyn SaddleOracle> {
        &self.oracle
    }

    pub fn value(&self, p: &Blocks) -> f64 {
        self.oracle.value(p)
    }

    /// Projection of every block onto its set.
    pub fn project(&self, p: &Blocks) -> Result<Blocks, DynamicsError> {
        let mut out = p.clone();
        project_blocks(&self.sets, &self.dims, &mut out)?;
        Ok(out)
    }
}

/// Projects every block of `p` in place; per-agent sets act on each copy.
pub fn project_blocks(
    sets: &BlockSets,
    dims: &BlockDims,
    p: &mut Blocks,
) -> Result<(), DynamicsError> {
    p.check_dims(dims)?;
    sets.w.project_in_place(&mut p.w)?;
    if dims.d > 0 {
        for copy in p.d.chunks_exact_mut(dims.d) {
            sets.d.project_in_place(copy)?;
        }
    }
    sets.mu.project_in_place(&mut p.mu)?;
    if dims.z > 0 {
        for copy in p.z.chunks_exact_mut(dims.z) {
            sets.z.project_in_place(copy)?;
        }
    }
    Ok(())
}

/// Name of the first block farther than `tol` from its set, if any.
pub fn infeasible_block(
    sets: &BlockSets,
    dims: &BlockDims,
    p: &Blocks,
    tol: f64,
) -> Result<Option<&'static str>, DynamicsError> {
    p.check_dims(dims)?;
    if !sets.w.contains(&p.w, tol)? {
        return Ok(Some("w"));
    }
    if dims.d > 0 {
        for copy in p.d.chunks_exact(dims.d) {
            if !sets.d.contains(copy, tol)? {
                return Ok(Some("D"));
            }
        }
    }
    if !sets.mu.contains(&p.mu, tol)? {
        return Ok(Some("mu"));
    }
    if dims.z > 0 {
        for copy in p.z.chunks_exact(dims.z) {
            if !sets.z.contains(copy, tol)? {
                return Ok(Some("z"));
            }
        }
    }
    Ok(None)
}

/// Something that can drive one iteration of the dynamics. Implemented by the
/// generic [`SaddleProblem`] and by the per-agent constrained-optimization
/// update.
pub trait SaddleIteration {
    fn dims(&self) -> BlockDims;
    fn sets(&self) -> &BlockSets;
    fn value(&self, p: &Blocks) -> f64;
    fn subgradients(&self, p: &Blocks) -> Blocks;
    /// Next state from `p` given the subgradients `g` evaluated at `p`.
    fn update(
        &self,
        p: &Blocks,
        g: &Blocks,
        graph: &WeightedDigraph,
        sigma: f64,
        eta: f64,
    ) -> Result<Blocks, DynamicsError>;
}

impl SaddleIteration for SaddleProblem {
    fn dims(&self) -> BlockDims {
        self.dims
    }

    fn sets(&self) -> &BlockSets {
        &self.sets
    }

    fn value(&self, p: &Blocks) -> f64 {
        self.oracle.value(p)
    }

    fn subgradients(&self, p: &Blocks) -> Blocks {
        self.oracle.subgradients(p)
    }

    fn update(
        &self,
        p: &Blocks,
        g: &Blocks,
        graph: &WeightedDigraph,
        sigma: f64,
        eta: f64,
    ) -> Result<Blocks, DynamicsError> {
        let dims = self.dims;
        if graph.n() != dims.agents {
            return Err(DynamicsError::AgentMismatch {
                expected: dims.agents,
                got: graph.n(),
            });
        }
        g.check_dims(&dims)?;
        g.check_finite()?;
        let ld = graph.apply_laplacian(&p.d, dims.d);
        let lz = graph.apply_laplacian(&p.z, dims.z);
        let mut next = Blocks {
            w: p.w.iter().zip(&g.w).map(|(x, gx)| x - eta * gx).collect(),
            d: (0..p.d.len())
                .map(|k| p.d[k] - sigma * ld[k] - eta * g.d[k])
                .collect(),
            mu: p.mu.iter().zip(&g.mu).map(|(x, gx)| x + eta * gx).collect(),
            z: (0..p.z.len())
                .map(|k| p.z[k] - sigma * lz[k] + eta * g.z[k])
                .collect(),
        };
        project_blocks(&self.sets, &dims, &mut next)?;
        next.check_finite()?;
        Ok(next)
    }
}

/// Learning-rate schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Schedule {
    /// `1/√(2^m)` on epoch `m`, i.e. steps `2^m ..= 2^{m+1} − 1`.
    #[default]
    DoublingTrick,
    Constant {
        eta: f64,
    },
    InvSqrt {
        c: f64,
    },
    Harmonic {
        c: f64,
    },
}

impl Schedule {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let v = match self {
            Schedule::DoublingTrick => return Ok(()),
            Schedule::Constant { eta } => *eta,
            Schedule::InvSqrt { c } | Schedule::Harmonic { c } => *c,
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(DynamicsError::InvalidSchedule(format!(
                "{self:?}: parameter must be positive"
            )))
        }
    }

    /// `η_t` for `t ≥ 1`.
    pub fn rate(&self, t: usize) -> Result<f64, DynamicsError> {
        if t == 0 {
            return Err(DynamicsError::BadRateIndex(t));
        }
        Ok(match self {
            Schedule::DoublingTrick => {
                let epoch = usize::BITS - 1 - t.leading_zeros();
                1.0 / 2f64.powi(epoch as i32).sqrt()
            }
            Schedule::Constant { eta } => *eta,
            Schedule::InvSqrt { c } => c / (t as f64).sqrt(),
            Schedule::Harmonic { c } => c / t as f64,
        })
    }
}

/// `η_t`; free-function form of [`Schedule::rate`].
pub fn rate(schedule: &Schedule, t: usize) -> Result<f64, DynamicsError> {
    schedule.rate(t)
}

/// `((t − 1)/t)·avg + (1/t)·x`: the mean of iterates `1..=t` given the mean of
/// iterates `1..t`.
pub fn update_running_average(avg: &[f64], x: &[f64], t: usize) -> Vec<f64> {
    assert!(t >= 1, "running average index is 1-based");
    let a = (t - 1) as f64 / t as f64;
    let b = 1.0 / t as f64;
    avg.iter().zip(x).map(|(m, v)| a * m + b * v).collect()
}

/// Current iterate `x_t` and the running average of `x_1..=x_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub t: usize,
    pub point: Blocks,
    pub avg: Blocks,
}

impl NetworkState {
    pub fn initial(point: Blocks) -> NetworkState {
        NetworkState {
            t: 1,
            avg: point.clone(),
            point,
        }
    }

    /// Moves to `next` as iterate `t + 1` and folds it into the average.
    pub fn advance_to(&self, next: Blocks) -> NetworkState {
        let t = self.t + 1;
        let avg = self.avg.zip_with(&next, |m, v| {
            let a = (t - 1) as f64 / t as f64;
            a * m + v / t as f64
        });
        NetworkState {
            t,
            point: next,
            avg,
        }
    }
}

/// One step of the dynamics from `state` over `graph`.
pub fn step(
    problem: &impl SaddleIteration,
    state: &NetworkState,
    graph: &WeightedDigraph,
    sigma: f64,
    eta: f64,
) -> Result<NetworkState, DynamicsError> {
    let g = problem.subgradients(&state.point);
    g.check_dims(&problem.dims())?;
    let next = problem.update(&state.point, &g, graph, sigma, eta)?;
    Ok(state.advance_to(next))
}

/// Auxiliary metrics evaluated at the running averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxMetrics {
    pub cost_err: Option<f64>,
    pub constraint_violation: Option<f64>,
}

pub type AuxProbe<'a> = &'a (dyn Fn(&Blocks) -> AuxMetrics + Sync);

#[derive(Clone, Copy)]
pub struct RunOptions<'a> {
    /// Record every `stride`-th step; `t = 1` and `t = T` are always recorded.
    pub stride: usize,
    /// Keep every iterate with its subgradient norms (needed for the
    /// cumulative-evaluation-error check).
    pub keep_history: bool,
    /// `φ` at a saddle point, used for the saddle-gap column.
    pub saddle_value: Option<f64>,
    pub delta_tilde_prime: f64,
    /// Reject a `σ` outside the admissible window instead of warning.
    pub enforce_sigma_window: bool,
    pub aux: Option<AuxProbe<'a>>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            stride: 1,
            keep_history: false,
            saddle_value: None,
            delta_tilde_prime: DEFAULT_DELTA_TILDE_PRIME,
            enforce_sigma_window: true,
            aux: None,
        }
    }
}

/// Quantities recorded at iterate `t`.
///
/// `phi_at_avg` is `φ` at the mean of `x_1..=x_t`. The input statistics cover
/// the perturbations `η_s g_s` applied in steps `s = 1..t−1`, i.e. before
/// `x_t` was reached; the cumulative disagreement covers `s = 1..=t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub eta: f64,
    pub phi_at_avg: f64,
    pub saddle_gap: Option<f64>,
    pub disagreement_d: f64,
    pub disagreement_z: f64,
    pub cum_disagreement_d: f64,
    pub cum_disagreement_z: f64,
    pub input_max_d: f64,
    pub input_max_z: f64,
    pub input_sum_d: f64,
    pub input_sum_z: f64,
    pub cost_err: Option<f64>,
    pub constraint_violation: Option<f64>,
}

/// Full iterate at step `t` with the data the cumulative bounds need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub t: usize,
    pub point: Blocks,
    pub eta: f64,
    /// `‖g_w‖, ‖g_D‖, ‖g_μ‖, ‖g_z‖` at `x_t`.
    pub subgrad_norms: [f64; 4],
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: usize,
    pub point: Blocks,
    pub avg: Blocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: usize,
    pub sigma: f64,
    pub schedule: Schedule,
    /// `‖w_1‖, ‖D_1‖, ‖μ_1‖, ‖z_1‖`.
    pub initial_norms: [f64; 4],
    /// Largest block norms observed over the run (a-posteriori `B_*`).
    pub max_state_norms: [f64; 4],
    /// Largest subgradient norms observed over the run (a-posteriori `H_*`).
    pub max_subgrad_norms: [f64; 4],
    pub final_state: NetworkState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub dims: BlockDims,
    pub records: Vec<StepRecord>,
    /// Iterates at `t = 1, 2, 4, 8, …` and `t = T`.
    pub snapshots: Vec<Snapshot>,
    pub history: Option<Vec<HistoryEntry>>,
    pub summary: RunSummary,
}

/// Checks `σ` against the admissible window of `graphs`.
pub fn check_sigma(
    graphs: &DigraphSequence,
    sigma: f64,
    delta_tilde_prime: f64,
    enforce: bool,
) -> Result<(), DynamicsError> {
    if graphs.n() == 1 {
        return Ok(());
    }
    let window = graphs.stepsize_window(delta_tilde_prime)?;
    if !window.contains(sigma) {
        if enforce {
            return Err(DynamicsError::SigmaOutsideWindow {
                sigma,
                lo: window.lo,
                hi: window.hi,
            });
        }
        log::warn!(
            "consensus stepsize {sigma} is outside [{}, {}]; convergence bounds do not apply",
            window.lo,
            window.hi
        );
    }
    Ok(())
}

/// Runs the dynamics from `initial` (iterate `t = 1`) up to iterate `T`.
pub fn run(
    problem: &impl SaddleIteration,
    graphs: &DigraphSequence,
    sigma: f64,
    schedule: &Schedule,
    horizon: usize,
    initial: Blocks,
    opts: &RunOptions<'_>,
) -> Result<RunTrace, DynamicsError> {
    if horizon == 0 {
        return Err(DynamicsError::ZeroHorizon);
    }
    if opts.stride == 0 {
        return Err(DynamicsError::ZeroStride);
    }
    schedule.validate()?;
    let dims = problem.dims();
    if graphs.n() != dims.agents {
        return Err(DynamicsError::AgentMismatch {
            expected: dims.agents,
            got: graphs.n(),
        });
    }
    initial.check_dims(&dims)?;
    initial.check_finite()?;
    if let Some(block) = infeasible_block(problem.sets(), &dims, &initial, FEASIBILITY_TOL)? {
        return Err(DynamicsError::InfeasibleInitial(block));
    }
    check_sigma(
        graphs,
        sigma,
        opts.delta_tilde_prime,
        opts.enforce_sigma_window,
    )?;

    let initial_norms = initial.norms();
    let mut state = NetworkState::initial(initial);
    let mut records = Vec::with_capacity(horizon / opts.stride + 2);
    let mut snapshots = Vec::new();
    let mut history = opts.keep_history.then(|| Vec::with_capacity(horizon));
    let mut max_state = [0.0f64; 4];
    let mut max_subgrad = [0.0f64; 4];
    let (mut cum_d, mut cum_z) = (0.0, 0.0);
    let (mut in_max_d, mut in_max_z, mut in_sum_d, mut in_sum_z) = (0.0f64, 0.0f64, 0.0, 0.0);
    let mut next_snapshot = 1usize;

    for t in 1..=horizon {
        let eta = schedule.rate(t)?;
        let g = problem.subgradients(&state.point);
        g.check_dims(&dims)?;
        g.check_finite().map_err(|e| DynamicsError::AtStep {
            step: t,
            source: Box::new(e),
        })?;
        let g_norms = g.norms();
        let x_norms = state.point.norms();
        for k in 0..4 {
            max_state[k] = max_state[k].max(x_norms[k]);
            max_subgrad[k] = max_subgrad[k].max(g_norms[k]);
        }
        let dis_d = crate::analysis::disagreement_unchecked(&state.point.d, dims.agents, dims.d);
        let dis_z = crate::analysis::disagreement_unchecked(&state.point.z, dims.agents, dims.z);
        cum_d += dis_d;
        cum_z += dis_z;

        if t == 1 || t == horizon || t % opts.stride == 0 {
            let phi_at_avg = problem.value(&state.avg);
            let aux = opts.aux.map(|f| f(&state.avg));
            records.push(StepRecord {
                t,
                eta,
                phi_at_avg,
                saddle_gap: opts.saddle_value.map(|v| (phi_at_avg - v).abs()),
                disagreement_d: dis_d,
                disagreement_z: dis_z,
                cum_disagreement_d: cum_d,
                cum_disagreement_z: cum_z,
                input_max_d: in_max_d,
                input_max_z: in_max_z,
                input_sum_d: in_sum_d,
                input_sum_z: in_sum_z,
                cost_err: aux.and_then(|a| a.cost_err),
                constraint_violation: aux.and_then(|a| a.constraint_violation),
            });
        }
        if t == next_snapshot || t == horizon {
            snapshots.push(Snapshot {
                t,
                point: state.point.clone(),
                avg: state.avg.clone(),
            });
            if t == next_snapshot {
                next_snapshot *= 2;
            }
        }
        if let Some(h) = history.as_mut() {
            h.push(HistoryEntry {
                t,
                point: state.point.clone(),
                eta,
                subgrad_norms: g_norms,
                phi: problem.value(&state.point),
            });
        }
        if t == horizon {
            break;
        }

        in_max_d = in_max_d.max(eta * g_norms[1]);
        in_max_z = in_max_z.max(eta * g_norms[3]);
        in_sum_d += eta * g_norms[1];
        in_sum_z += eta * g_norms[3];

        let next = problem
            .update(&state.point, &g, graphs.at(t), sigma, eta)
            .map_err(|e| DynamicsError::AtStep {
                step: t,
                source: Box::new(e),
            })?;
        state = state.advance_to(next);
    }

    Ok(RunTrace {
        dims,
        records,
        snapshots,
        history,
        summary: RunSummary {
            horizon,
            sigma,
            schedule: *schedule,
            initial_norms,
            max_state_norms: max_state,
            max_subgrad_norms: max_subgrad,
            final_state: state,
        },
    })
}

/// Sum of squared learning rates `Σ_{s≤t} η_s²`.
pub fn squared_rate_sum(schedule: &Schedule, t: usize) -> Result<f64, DynamicsError> {
    (1..=t).map(|s| schedule.rate(s).map(|e| e * e)).sum()
}

/// `‖x − y‖²` summed over all four blocks.
pub fn blocks_dist_sq(a: &Blocks, b: &Blocks) -> f64 {
    let d = a.zip_with(b, |x, y| x - y);
    norm_sq(&d.w) + norm_sq(&d.d) + norm_sq(&d.mu) + norm_sq(&d.z)
}
