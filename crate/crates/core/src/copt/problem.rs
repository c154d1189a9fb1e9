use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functions::{minimize_weighted_term, CoordinateFn};
use super::CoptError;
use crate::dynamics::{
    project_blocks, BlockDims, BlockSets, Blocks, DynamicsError, NetworkState, SaddleIteration,
    SaddleOracle, SaddleProblem,
};
use crate::graph::WeightedDigraph;
use crate::linalg::{norm, sub};
use crate::projection::ConvexSet;

/// Iteration budget of the projected-subgradient fallback for sets that are
/// not boxes.
pub const INNER_ITERS: usize = 10_000;
/// Stop the fallback once an iterate moves less than this.
pub const INNER_TOL: f64 = 1e-8;

/// One agent of a separable problem: local variable `w^i ∈ W_i`, objective
/// `f^i(w^i, D)` and constraint map `g^i(w^i, D) ∈ ℝ^m`. The functions act on
/// the concatenation `(w^i, D)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub dim: usize,
    pub set: ConvexSet,
    pub objective: CoordinateFn,
    pub constraints: Vec<CoordinateFn>,
}

/// `min Σ_i f^i(w^i, D)` subject to `Σ_i g^i(w^i, D) ≤ 0`, `w^i ∈ W_i`,
/// `D ∈ 𝒟`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableProblem {
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub global_dim: usize,
    #[serde(default = "full_space")]
    pub global_set: ConvexSet,
}

fn full_space() -> ConvexSet {
    ConvexSet::FullSpace
}

/// Coordinate bounds when `set` is exactly a box (or a product of boxes).
pub fn exact_box(set: &ConvexSet, dim: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    match set {
        ConvexSet::Box { .. } => set.bounding_box(dim),
        ConvexSet::FullSpace | ConvexSet::NonnegOrthant if dim == 0 => Some((vec![], vec![])),
        ConvexSet::Product { parts } => {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for p in parts {
                let (l, h) = exact_box(&p.set, p.dim)?;
                lo.extend(l);
                hi.extend(h);
            }
            Some((lo, hi))
        }
        _ => None,
    }
}

impl SeparableProblem {
    pub fn new(
        agents: Vec<AgentSpec>,
        global_dim: usize,
        global_set: ConvexSet,
    ) -> Result<Self, CoptError> {
        let p = SeparableProblem {
            agents,
            global_dim,
            global_set,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CoptError> {
        if self.agents.is_empty() {
            return Err(CoptError::Invalid("problem has no agents".into()));
        }
        let m = self.agents[0].constraints.len();
        if m == 0 {
            return Err(CoptError::Invalid(
                "at least one constraint is required".into(),
            ));
        }
        self.global_set.validate()?;
        if let Some(d) = self.global_set.fixed_dim() {
            if d != self.global_dim {
                return Err(CoptError::Invalid(format!(
                    "global set has dimension {d}, expected {}",
                    self.global_dim
                )));
            }
        }
        if self.global_dim > 0 && self.global_set.diameter(self.global_dim).is_none() {
            return Err(CoptError::Invalid(
                "global-decision set must be compact".into(),
            ));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.constraints.len() != m {
                return Err(CoptError::Invalid(format!(
                    "agent {i} has {} constraints, agent 0 has {m}",
                    a.constraints.len()
                )));
            }
            a.set.validate()?;
            if let Some(d) = a.set.fixed_dim() {
                if d != a.dim {
                    return Err(CoptError::Invalid(format!(
                        "agent {i}: set has dimension {d}, variable has {}",
                        a.dim
                    )));
                }
            }
            let (lo, _) = self.agent_bounding_box(i).ok_or_else(|| {
                CoptError::Invalid(format!("agent {i}: local set must be compact"))
            })?;
            let full = a.dim + self.global_dim;
            for f in std::iter::once(&a.objective).chain(&a.constraints) {
                f.validate(full)?;
                for (k, l) in lo.iter().enumerate() {
                    if f.has_log(k) && *l <= -1.0 {
                        return Err(CoptError::Invalid(format!(
                            "agent {i}: log term on coordinate {k} needs the set to stay above -1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    /// Number of constraints `m`.
    pub fn m(&self) -> usize {
        self.agents[0].constraints.len()
    }

    pub fn total_w_dim(&self) -> usize {
        self.agents.iter().map(|a| a.dim).sum()
    }

    /// Start of each agent's slice in the stacked `w`.
    pub fn w_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.agents.len());
        let mut acc = 0;
        for a in &self.agents {
            off.push(acc);
            acc += a.dim;
        }
        off
    }

    /// Bounding box of `W_i × 𝒟`.
    pub fn agent_bounding_box(&self, i: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let a = &self.agents[i];
        let (mut lo, mut hi) = a.set.bounding_box(a.dim)?;
        if self.global_dim > 0 {
            let (l, h) = self.global_set.bounding_box(self.global_dim)?;
            lo.extend(l);
            hi.extend(h);
        }
        Some((lo, hi))
    }

    fn concat(w: &[f64], d: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(w.len() + d.len());
        x.extend_from_slice(w);
        x.extend_from_slice(d);
        x
    }

    pub fn objective_at(&self, i: usize, w: &[f64], d: &[f64]) -> f64 {
        self.agents[i].objective.value(&Self::concat(w, d))
    }

    pub fn constraints_at(&self, i: usize, w: &[f64], d: &[f64]) -> Vec<f64> {
        let x = Self::concat(w, d);
        self.agents[i]
            .constraints
            .iter()
            .map(|g| g.value(&x))
            .collect()
    }

    /// `Σ_i f^i(w^i, D)` for a common `D`.
    pub fn total_objective(&self, w: &[f64], d: &[f64]) -> f64 {
        let off = self.w_offsets();
        (0..self.n_agents())
            .map(|i| self.objective_at(i, &w[off[i]..off[i] + self.agents[i].dim], d))
            .sum()
    }

    /// `Σ_i g^i(w^i, D)` for a common `D`.
    pub fn total_constraint(&self, w: &[f64], d: &[f64]) -> Vec<f64> {
        let off = self.w_offsets();
        let mut total = vec![0.0; self.m()];
        for i in 0..self.n_agents() {
            let g = self.constraints_at(i, &w[off[i]..off[i] + self.agents[i].dim], d);
            for (t, v) in total.iter_mut().zip(g) {
                *t += v;
            }
        }
        total
    }

    fn require_no_agreement(&self) -> Result<(), CoptError> {
        if self.global_dim > 0 {
            Err(CoptError::AgreementVariables)
        } else {
            Ok(())
        }
    }

    /// `min_{w ∈ W_i} λ f^i(w) + Σ_l μ_l g^i_l(w)` with nonnegative weights.
    /// Exact per coordinate on boxes; projected subgradient otherwise.
    pub fn minimize_local(
        &self,
        i: usize,
        objective_weight: f64,
        constraint_weights: &[f64],
    ) -> Result<(Vec<f64>, f64), CoptError> {
        self.require_no_agreement()?;
        let a = &self.agents[i];
        let mut fns: Vec<(f64, &CoordinateFn)> = Vec::new();
        if objective_weight != 0.0 {
            fns.push((objective_weight, &a.objective));
        }
        for (w, g) in constraint_weights.iter().zip(&a.constraints) {
            if *w != 0.0 {
                fns.push((*w, g));
            }
        }
        let offset: f64 = fns.iter().map(|(w, f)| w * f.offset).sum();
        if let Some((lo, hi)) = exact_box(&a.set, a.dim) {
            let mut x = Vec::with_capacity(a.dim);
            let mut v = offset;
            for k in 0..a.dim {
                let (xk, vk) = minimize_weighted_term(&fns, k, lo[k], hi[k]);
                x.push(xk);
                v += vk;
            }
            return Ok((x, v));
        }
        let value = |x: &[f64]| fns.iter().map(|(w, f)| w * f.value(x)).sum::<f64>();
        let grad = |x: &[f64]| {
            let mut g = vec![0.0; x.len()];
            for (w, f) in &fns {
                for (gk, sk) in g.iter_mut().zip(f.subgradient(x)) {
                    *gk += w * sk;
                }
            }
            g
        };
        projected_subgradient(&a.set, a.dim, value, grad)
    }

    /// Sup of `‖g^i‖` over `W_i × 𝒟`, evaluated on the bounding box (exact
    /// for boxes, an upper bound otherwise).
    pub fn constraint_sup_norm(&self, i: usize) -> Result<f64, CoptError> {
        let (lo, hi) = self
            .agent_bounding_box(i)
            .ok_or_else(|| CoptError::Invalid(format!("agent {i}: unbounded set")))?;
        Ok(self.agents[i]
            .constraints
            .iter()
            .map(|g| {
                let (mn, mx) = g.range_on_box(&lo, &hi);
                mn.abs().max(mx.abs()).powi(2)
            })
            .sum::<f64>()
            .sqrt())
    }

    /// Per-agent sup norms of the partial subgradients over bounding boxes,
    /// maximized over agents (and constraint rows for `g`).
    pub fn subgradient_bounds(&self) -> Result<SubgradientBounds, CoptError> {
        let mut b = SubgradientBounds::default();
        for i in 0..self.n_agents() {
            let (lo, hi) = self
                .agent_bounding_box(i)
                .ok_or_else(|| CoptError::Invalid(format!("agent {i}: unbounded set")))?;
            let dim = self.agents[i].dim;
            let sup = |f: &CoordinateFn, range: std::ops::Range<usize>| {
                range
                    .map(|k| f.max_abs_derivative(k, lo[k], hi[k]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            let full = dim + self.global_dim;
            let obj = &self.agents[i].objective;
            b.f_w = b.f_w.max(sup(obj, 0..dim));
            b.f_d = b.f_d.max(sup(obj, dim..full));
            for g in &self.agents[i].constraints {
                b.g_w = b.g_w.max(sup(g, 0..dim));
                b.g_d = b.g_d.max(sup(g, dim..full));
            }
        }
        Ok(b)
    }
}

/// Bounds on subgradient norms of the agent functions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubgradientBounds {
    pub f_w: f64,
    pub f_d: f64,
    pub g_w: f64,
    pub g_d: f64,
}

fn projected_subgradient(
    set: &ConvexSet,
    dim: usize,
    value: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, f64), CoptError> {
    let scale = set.diameter(dim).unwrap_or(1.0).max(1e-12);
    let mut x = set.project(&vec![0.0; dim])?;
    let mut best = (x.clone(), value(&x));
    for k in 1..=INNER_ITERS {
        let g = grad(&x);
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let step = scale / (gn * (k as f64).sqrt());
        let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
        let y = set.project(&y)?;
        let moved = norm(&sub(&y, &x));
        x = y;
        let v = value(&x);
        if v < best.1 {
            best = (x.clone(), v);
        }
        if moved < INNER_TOL {
            break;
        }
    }
    Ok(best)
}

/// Slater components `w̃^i`: minimizers of `g^i` (of `max_l g^i_l` when
/// `m > 1`) over `W_i`. Fails unless `Σ_i g^i(w̃^i) < 0` in every row.
pub fn slater_components(sep: &SeparableProblem) -> Result<Vec<Vec<f64>>, CoptError> {
    sep.require_no_agreement()?;
    let m = sep.m();
    let mut out = Vec::with_capacity(sep.n_agents());
    for i in 0..sep.n_agents() {
        let w = if m == 1 {
            sep.minimize_local(i, 0.0, &[1.0])?.0
        } else {
            let a = &sep.agents[i];
            let value = |x: &[f64]| {
                a.constraints
                    .iter()
                    .map(|g| g.value(x))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let grad = |x: &[f64]| {
                let top = a
                    .constraints
                    .iter()
                    .max_by(|p, q| p.value(x).total_cmp(&q.value(x)))
                    .expect("m > 1");
                top.subgradient(x)
            };
            projected_subgradient(&a.set, a.dim, value, grad)?.0
        };
        out.push(w);
    }
    let stacked: Vec<f64> = out.iter().flatten().copied().collect();
    let total = sep.total_constraint(&stacked, &[]);
    if total.iter().any(|v| !(*v < 0.0)) {
        return Err(CoptError::SlaterNotCertified(total));
    }
    Ok(out)
}

/// `min_l −Σ_i g^i_l(w̃^i)`.
pub fn exact_gamma(sep: &SeparableProblem, slater: &[Vec<f64>]) -> f64 {
    let stacked: Vec<f64> = slater.iter().flatten().copied().collect();
    sep.total_constraint(&stacked, &[])
        .iter()
        .map(|v| -v)
        .fold(f64::INFINITY, f64::min)
}

/// Centralized radius `N (max_j f^j(w̃^j) − min_j q^j(z̄)) / γ` with the exact
/// `γ`; the distributed protocol can only return something larger.
pub fn exact_radius(sep: &SeparableProblem, z_bar: &[f64]) -> Result<f64, CoptError> {
    let slater = slater_components(sep)?;
    let gamma = exact_gamma(sep, &slater);
    let f_max = (0..sep.n_agents())
        .map(|i| sep.objective_at(i, &slater[i], &[]))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut q_min = f64::INFINITY;
    for i in 0..sep.n_agents() {
        q_min = q_min.min(sep.minimize_local(i, 1.0, z_bar)?.1);
    }
    Ok(sep.n_agents() as f64 * (f_max - q_min) / gamma)
}

fn lagrangian_layout(sep: &SeparableProblem, r: f64) -> Result<(BlockDims, BlockSets), CoptError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CoptError::NonPositiveRadius(r));
    }
    sep.validate()?;
    let dims = BlockDims {
        agents: sep.n_agents(),
        w: sep.total_w_dim(),
        d: sep.global_dim,
        mu: 0,
        z: sep.m(),
    };
    let sets = BlockSets {
        w: ConvexSet::product(sep.agents.iter().map(|a| (a.set.clone(), a.dim)).collect()),
        d: sep.global_set.clone(),
        mu: ConvexSet::FullSpace,
        z: ConvexSet::OrthantBall { r },
    };
    Ok((dims, sets))
}

/// `φ(w, D, z) = Σ_i f^i(w^i, D^i) + (z^i)ᵀ g^i(w^i, D^i)`.
#[derive(Debug, Clone)]
pub struct LagrangianOracle {
    sep: Arc<SeparableProblem>,
    offsets: Vec<usize>,
}

impl LagrangianOracle {
    fn agent_x(&self, i: usize, p: &Blocks) -> Vec<f64> {
        let dim = self.sep.agents[i].dim;
        let dd = self.sep.global_dim;
        let mut x = p.w[self.offsets[i]..self.offsets[i] + dim].to_vec();
        x.extend_from_slice(&p.d[i * dd..(i + 1) * dd]);
        x
    }
}

impl SaddleOracle for LagrangianOracle {
    fn value(&self, p: &Blocks) -> f64 {
        let m = self.sep.m();
        let mut total = 0.0;
        for (i, a) in self.sep.agents.iter().enumerate() {
            let x = self.agent_x(i, p);
            total += a.objective.value(&x);
            for (l, g) in a.constraints.iter().enumerate() {
                total += p.z[i * m + l] * g.value(&x);
            }
        }
        total
    }

    fn subgradients(&self, p: &Blocks) -> Blocks {
        let m = self.sep.m();
        let dd = self.sep.global_dim;
        let mut out = Blocks {
            w: vec![0.0; p.w.len()],
            d: vec![0.0; p.d.len()],
            mu: vec![],
            z: vec![0.0; p.z.len()],
        };
        for (i, a) in self.sep.agents.iter().enumerate() {
            let x = self.agent_x(i, p);
            let mut g = a.objective.subgradient(&x);
            for (l, c) in a.constraints.iter().enumerate() {
                let zl = p.z[i * m + l];
                for (gk, ck) in g.iter_mut().zip(c.subgradient(&x)) {
                    *gk += zl * ck;
                }
                out.z[i * m + l] = c.value(&x);
            }
            out.w[self.offsets[i]..self.offsets[i] + a.dim].copy_from_slice(&g[..a.dim]);
            out.d[i * dd..(i + 1) * dd].copy_from_slice(&g[a.dim..]);
        }
        out
    }
}

/// The Lagrangian saddle problem with multipliers restricted to
/// `ℝ^m_{≥0} ∩ B̄(0, r)` for every agent; the `μ` block is empty.
pub fn build_lagrangian_saddle(sep: &SeparableProblem, r: f64) -> Result<SaddleProblem, CoptError> {
    let (dims, sets) = lagrangian_layout(sep, r)?;
    let oracle = LagrangianOracle {
        offsets: sep.w_offsets(),
        sep: Arc::new(sep.clone()),
    };
    Ok(SaddleProblem::new(dims, sets, Arc::new(oracle))?)
}

/// Per-agent form of the dynamics on the Lagrangian: every agent updates its
/// own `w^i`, `D^i`, `z^i` from its neighbors' copies.
#[derive(Debug, Clone)]
pub struct Cspsg {
    sep: Arc<SeparableProblem>,
    r: f64,
    dims: BlockDims,
    sets: BlockSets,
    offsets: Vec<usize>,
}

impl Cspsg {
    pub fn new(sep: &SeparableProblem, r: f64) -> Result<Self, CoptError> {
        let (dims, sets) = lagrangian_layout(sep, r)?;
        Ok(Cspsg {
            offsets: sep.w_offsets(),
            sep: Arc::new(sep.clone()),
            r,
            dims,
            sets,
        })
    }

    pub fn problem(&self) -> &SeparableProblem {
        &self.sep
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    fn local(&self, i: usize, p: &Blocks) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let a = &self.sep.agents[i];
        let (dd, m) = (self.dims.d, self.dims.z);
        (
            p.w[self.offsets[i]..self.offsets[i] + a.dim].to_vec(),
            p.d[i * dd..(i + 1) * dd].to_vec(),
            p.z[i * m..(i + 1) * m].to_vec(),
        )
    }

    /// `(∂_w f^i + (∂_w g^i)ᵀ z^i, ∂_D f^i + (∂_D g^i)ᵀ z^i, g^i)` at agent `i`.
    fn agent_subgradients(
        &self,
        i: usize,
        w: &[f64],
        d: &[f64],
        z: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let a = &self.sep.agents[i];
        let x: Vec<f64> = w.iter().chain(d).copied().collect();
        let df = a.objective.subgradient(&x);
        let mut gw = df[..a.dim].to_vec();
        let mut gd = df[a.dim..].to_vec();
        let mut gz = Vec::with_capacity(z.len());
        for (zl, c) in z.iter().zip(&a.constraints) {
            let dc = c.subgradient(&x);
            for k in 0..a.dim {
                gw[k] += zl * dc[k];
            }
            for k in 0..gd.len() {
                gd[k] += zl * dc[a.dim + k];
            }
            gz.push(c.value(&x));
        }
        (gw, gd, gz)
    }
}

impl SaddleIteration for Cspsg {
    fn dims(&self) -> BlockDims {
        self.dims
    }

    fn sets(&self) -> &BlockSets {
        &self.sets
    }

    fn value(&self, p: &Blocks) -> f64 {
        (0..self.dims.agents)
            .map(|i| {
                let (w, d, z) = self.local(i, p);
                let a = &self.sep.agents[i];
                let x: Vec<f64> = w.iter().chain(&d).copied().collect();
                a.objective.value(&x)
                    + z.iter()
                        .zip(&a.constraints)
                        .map(|(zl, c)| zl * c.value(&x))
                        .sum::<f64>()
            })
            .sum()
    }

    fn subgradients(&self, p: &Blocks) -> Blocks {
        let mut out = Blocks::zeros(&self.dims);
        let (dd, m) = (self.dims.d, self.dims.z);
        for i in 0..self.dims.agents {
            let (w, d, z) = self.local(i, p);
            let (gw, gd, gz) = self.agent_subgradients(i, &w, &d, &z);
            out.w[self.offsets[i]..self.offsets[i] + gw.len()].copy_from_slice(&gw);
            out.d[i * dd..(i + 1) * dd].copy_from_slice(&gd);
            out.z[i * m..(i + 1) * m].copy_from_slice(&gz);
        }
        out
    }

    fn update(
        &self,
        p: &Blocks,
        g: &Blocks,
        graph: &WeightedDigraph,
        sigma: f64,
        eta: f64,
    ) -> Result<Blocks, DynamicsError> {
        if graph.n() != self.dims.agents {
            return Err(DynamicsError::AgentMismatch {
                expected: self.dims.agents,
                got: graph.n(),
            });
        }
        g.check_finite()?;
        let (dd, m) = (self.dims.d, self.dims.z);
        let mut next = Blocks::zeros(&self.dims);
        for i in 0..self.dims.agents {
            let a = &self.sep.agents[i];
            let wi = self.offsets[i]..self.offsets[i] + a.dim;
            let mut w: Vec<f64> = p.w[wi.clone()]
                .iter()
                .zip(&g.w[wi.clone()])
                .map(|(x, gx)| x - eta * gx)
                .collect();
            a.set.project_in_place(&mut w)?;
            next.w[wi].copy_from_slice(&w);

            let mut d = vec![0.0; dd];
            let mut z = vec![0.0; m];
            for k in 0..dd {
                let mut mix = 0.0;
                for &(j, aij) in graph.out_neighbors(i) {
                    mix += aij * (p.d[j * dd + k] - p.d[i * dd + k]);
                }
                d[k] = p.d[i * dd + k] + sigma * mix - eta * g.d[i * dd + k];
            }
            for l in 0..m {
                let mut mix = 0.0;
                for &(j, aij) in graph.out_neighbors(i) {
                    mix += aij * (p.z[j * m + l] - p.z[i * m + l]);
                }
                z[l] = p.z[i * m + l] + sigma * mix + eta * g.z[i * m + l];
            }
            self.sets.d.project_in_place(&mut d)?;
            self.sets.z.project_in_place(&mut z)?;
            next.d[i * dd..(i + 1) * dd].copy_from_slice(&d);
            next.z[i * m..(i + 1) * m].copy_from_slice(&z);
        }
        next.check_finite()?;
        Ok(next)
    }
}

/// One C-SP-SG step from `state` over `graph`.
pub fn cspsg_step(
    alg: &Cspsg,
    state: &NetworkState,
    graph: &WeightedDigraph,
    sigma: f64,
    eta: f64,
) -> Result<NetworkState, CoptError> {
    Ok(crate::dynamics::step(alg, state, graph, sigma, eta)?)
}

/// Projects a stacked state onto the Lagrangian sets.
pub fn project_state(alg: &Cspsg, p: &mut Blocks) -> Result<(), CoptError> {
    Ok(project_blocks(&alg.sets, &alg.dims, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step;

    fn scalar_problem(lo: f64, hi: f64) -> SeparableProblem {
        SeparableProblem::new(
            vec![AgentSpec {
                dim: 1,
                set: ConvexSet::interval(lo, hi),
                objective: CoordinateFn::linear(vec![1.0], 0.0),
                constraints: vec![CoordinateFn::linear(vec![1.0], -1.0)],
            }],
            0,
            ConvexSet::FullSpace,
        )
        .unwrap()
    }

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

    fn point(w: f64, z: f64) -> Blocks {
        Blocks {
            w: vec![w],
            d: vec![],
            mu: vec![],
            z: vec![z],
        }
    }

    #[test]
    fn lagrangian_value_examples() {
        let sp = build_lagrangian_saddle(&scalar_problem(0.0, 2.0), 10.0).unwrap();
        assert_eq!(sp.value(&point(0.5, 2.0)), -0.5);
        assert_eq!(sp.value(&point(0.7, 0.0)), 0.7);
        assert!(build_lagrangian_saddle(&scalar_problem(0.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn cspsg_hand_step() {
        let alg = Cspsg::new(&scalar_problem(0.0, 2.0), 10.0).unwrap();
        let g = WeightedDigraph::empty(1).unwrap();
        let s = NetworkState::initial(point(1.0, 1.0));
        let next = cspsg_step(&alg, &s, &g, 0.0, 0.1).unwrap();
        assert!((next.point.w[0] - 0.8).abs() < 1e-15);
        assert_eq!(next.point.z[0], 1.0);
        let still = cspsg_step(&alg, &s, &g, 0.0, 0.0).unwrap();
        assert_eq!(still.point, s.point);
    }

    #[test]
    fn cspsg_matches_generic_step() {
        let sep = log_problem(&[0.3, 0.9], &[0.5, 0.8], 0.4);
        let alg = Cspsg::new(&sep, 3.0).unwrap();
        let sp = build_lagrangian_saddle(&sep, 3.0).unwrap();
        let g = WeightedDigraph::undirected(2, &[(0, 1)], 0.5).unwrap();
        let s = NetworkState::initial(Blocks {
            w: vec![0.2, 0.9],
            d: vec![],
            mu: vec![],
            z: vec![1.0, 0.1],
        });
        let a = cspsg_step(&alg, &s, &g, 0.4, 0.3).unwrap();
        let b = step(&sp, &s, &g, 0.4, 0.3).unwrap();
        for (x, y) in a
            .point
            .w
            .iter()
            .chain(&a.point.z)
            .zip(b.point.w.iter().chain(&b.point.z))
        {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn slater_examples() {
        let sep = log_problem(&[0.5, 0.5, 0.5], &[0.2, 0.6, 0.9], 0.3);
        assert_eq!(slater_components(&sep).unwrap(), vec![vec![1.0]; 3]);
        let lin = SeparableProblem::new(
            vec![AgentSpec {
                dim: 1,
                set: ConvexSet::interval(-1.0, 1.0),
                objective: CoordinateFn::default(),
                constraints: vec![CoordinateFn::linear(vec![1.0], 0.0)],
            }],
            0,
            ConvexSet::FullSpace,
        )
        .unwrap();
        assert_eq!(slater_components(&lin).unwrap(), vec![vec![-1.0]]);
        let two = log_problem(&[1.0, 1.0], &[1.0, 1.0], 0.2);
        let w = slater_components(&two).unwrap();
        let total = two.total_constraint(&w.concat(), &[])[0];
        assert!((total - (0.2 - 2.0 * 2f64.ln())).abs() < 1e-12);
        assert!((total + 1.18629).abs() < 1e-5);
    }

    #[test]
    fn slater_failure_is_reported() {
        let sep = log_problem(&[1.0], &[0.1], 5.0);
        assert!(matches!(
            slater_components(&sep),
            Err(CoptError::SlaterNotCertified(_))
        ));
    }

    #[test]
    fn exact_radius_for_two_agents() {
        let sep = log_problem(&[1.0, 1.0], &[1.0, 1.0], 0.2);
        let r = exact_radius(&sep, &[0.0]).unwrap();
        assert!((r - 2.0 / (2.0 * 2f64.ln() - 0.2)).abs() < 1e-12);
        assert!((r - 1.6859).abs() < 1e-4);
    }

    #[test]
    fn ball_sets_use_the_fallback_solver() {
        let sep = SeparableProblem::new(
            vec![AgentSpec {
                dim: 2,
                set: ConvexSet::CenteredBall { r: 1.0 },
                objective: CoordinateFn::default(),
                constraints: vec![CoordinateFn::linear(vec![1.0, 1.0], 0.0)],
            }],
            0,
            ConvexSet::FullSpace,
        )
        .unwrap();
        let w = slater_components(&sep).unwrap();
        let s = -1.0 / 2f64.sqrt();
        assert!((w[0][0] - s).abs() < 1e-3 && (w[0][1] - s).abs() < 1e-3);
    }
}
