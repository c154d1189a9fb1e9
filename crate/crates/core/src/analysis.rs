//! Theoretical constants of the convergence analysis and runtime checks of
//! the bounds they feed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copt::{CoptError, SeparableProblem, SubgradientBounds};
use crate::dynamics::{
    infeasible_block, Blocks, DynamicsError, RunTrace, SaddleIteration, StepRecord,
};
use crate::graph::{DigraphSequence, GraphError};
use crate::linalg::{dist, mean_stack, norm_sq};

/// Absolute slack allowed when comparing a measured quantity with a bound.
pub const BOUND_ABS_TOL: f64 = 1e-12;
/// Relative slack for the cumulative evaluation-error check, which sums many
/// function values.
pub const CUMULATIVE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("stacked vector has length {got}, expected {n} blocks of size {d}")]
    Shape { n: usize, d: usize, got: usize },
    #[error("set for block {0} is unbounded")]
    Unbounded(&'static str),
    #[error("probe point is not feasible (block {0})")]
    InfeasibleProbe(&'static str),
    #[error("trace does not store the iterate history")]
    MissingHistory,
    #[error(transparent)]
    Copt(#[from] CoptError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `‖(L_K ⊗ I_d) X‖ = ‖X − (M ⊗ I_d) X‖`.
pub fn disagreement(x: &[f64], n: usize, d: usize) -> Result<f64, AnalysisError> {
    if x.len() != n * d {
        return Err(AnalysisError::Shape { n, d, got: x.len() });
    }
    Ok(disagreement_unchecked(x, n, d))
}

pub(crate) fn disagreement_unchecked(x: &[f64], n: usize, d: usize) -> f64 {
    if n == 0 || d == 0 {
        return 0.0;
    }
    dist(x, &mean_stack(x, n, d))
}

/// Partial sums of a disagreement series.
pub fn cumulative_disagreement(series: &[f64]) -> Vec<f64> {
    series
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn check_contraction_inputs(delta_tilde: f64, n: usize, b: usize) -> Result<(), AnalysisError> {
    if !(delta_tilde > 0.0 && delta_tilde < 1.0) {
        return Err(AnalysisError::Domain(format!(
            "delta_tilde must lie in (0, 1), got {delta_tilde}"
        )));
    }
    if n < 2 {
        return Err(AnalysisError::Domain(format!("need N >= 2, got {n}")));
    }
    if b < 1 {
        return Err(AnalysisError::Domain("need B >= 1".into()));
    }
    Ok(())
}

/// `ρ = 1 − δ̃ / (4N²)`.
pub fn rho(delta_tilde: f64, n: usize) -> Result<f64, AnalysisError> {
    check_contraction_inputs(delta_tilde, n, 1)?;
    Ok(1.0 - delta_tilde / (4.0 * (n * n) as f64))
}

/// `C_u = (2⁵/3²) / (1 − ρ^{1/B})`.
pub fn c_u(delta_tilde: f64, n: usize, b: usize) -> Result<f64, AnalysisError> {
    check_contraction_inputs(delta_tilde, n, b)?;
    let x = delta_tilde / (4.0 * (n * n) as f64);
    // 1 − (1 − x)^{1/B} without cancellation for tiny x.
    let denom = -((-x).ln_1p() / b as f64).exp_m1();
    Ok((32.0 / 9.0) / denom)
}

/// Network-side parameters of the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub n: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub sigma: f64,
    pub lambda_bar: f64,
    pub delta_tilde: f64,
}

impl NetworkParams {
    /// Parameters of `graphs` with `δ̃` taken from the stepsize window at
    /// `δ̃′`.
    pub fn from_graphs(
        graphs: &DigraphSequence,
        sigma: f64,
        delta_tilde_prime: f64,
    ) -> Result<Self, AnalysisError> {
        let delta_tilde = if graphs.n() == 1 {
            delta_tilde_prime
        } else {
            graphs.stepsize_window(delta_tilde_prime)?.delta_tilde
        };
        Ok(NetworkParams {
            n: graphs.n(),
            b: graphs.b(),
            sigma,
            lambda_bar: graphs.lambda_bar(),
            delta_tilde,
        })
    }
}

/// Iterate-norm bounds `B_*` and subgradient-norm bounds `H_*`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub b_w: f64,
    pub b_d: f64,
    pub b_mu: f64,
    pub b_z: f64,
    pub h_w: f64,
    pub h_d: f64,
    pub h_mu: f64,
    pub h_z: f64,
}

/// All constants of the convergence envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub norms: NormBounds,
    pub network: NetworkParams,
    pub rho: f64,
    /// Zero for a single agent, where there is no disagreement to bound.
    pub c_u: f64,
    pub c_wd: f64,
    pub c_muz: f64,
    pub cbar_wd: f64,
    pub cbar_muz: f64,
}

/// `√2 / (√2 − 1)`.
pub const DOUBLING_FACTOR: f64 = std::f64::consts::SQRT_2 / (std::f64::consts::SQRT_2 - 1.0);

impl BoundConstants {
    pub fn new(norms: NormBounds, network: NetworkParams) -> Result<Self, AnalysisError> {
        let vals = [
            norms.b_w,
            norms.b_d,
            norms.b_mu,
            norms.b_z,
            norms.h_w,
            norms.h_d,
            norms.h_mu,
            norms.h_z,
            network.sigma,
            network.lambda_bar,
        ];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(AnalysisError::Domain(
                "norm bounds, sigma and lambda_bar must be finite and nonnegative".into(),
            ));
        }
        let (rho, c_u) = if network.n == 1 {
            (1.0 - network.delta_tilde / 4.0, 0.0)
        } else {
            (
                rho(network.delta_tilde, network.n)?,
                c_u(network.delta_tilde, network.n, network.b)?,
            )
        };
        let mut c = BoundConstants {
            norms,
            network,
            rho,
            c_u,
            c_wd: 0.0,
            c_muz: 0.0,
            cbar_wd: 0.0,
            cbar_muz: 0.0,
        };
        let d = cdoubling(&c);
        c.c_wd = d.c_wd;
        c.cbar_wd = d.cbar_wd;
        c.c_muz = d.c_muz;
        c.cbar_muz = d.cbar_muz;
        Ok(c)
    }

    /// A-posteriori constants: the largest norms observed in a run.
    pub fn from_trace(trace: &RunTrace, network: NetworkParams) -> Result<Self, AnalysisError> {
        let s = &trace.summary;
        let norms = NormBounds {
            b_w: s.max_state_norms[0],
            b_d: s.max_state_norms[1],
            b_mu: s.max_state_norms[2],
            b_z: s.max_state_norms[3],
            h_w: s.max_subgrad_norms[0],
            h_d: s.max_subgrad_norms[1],
            h_mu: s.max_subgrad_norms[2],
            h_z: s.max_subgrad_norms[3],
        };
        Self::new(norms, network)
    }
}

/// Constants for the Lagrangian of a separable problem with multipliers in
/// `ℝ^m_{≥0} ∩ B̄(0, r)`.
pub fn corollary_constants(
    sep: &SeparableProblem,
    r: f64,
    network: NetworkParams,
    h: SubgradientBounds,
) -> Result<BoundConstants, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::Domain(format!(
            "radius must be positive, got {r}"
        )));
    }
    let n = sep.n_agents() as f64;
    let m = sep.m() as f64;
    let mut sq = 0.0;
    for a in &sep.agents {
        sq += a
            .set
            .diameter(a.dim)
            .ok_or(AnalysisError::Unbounded("w"))?
            .powi(2);
    }
    let b_w = sq.sqrt();
    let (b_d, h_d) = if sep.global_dim == 0 {
        (0.0, 0.0)
    } else {
        let diam = sep
            .global_set
            .diameter(sep.global_dim)
            .ok_or(AnalysisError::Unbounded("D"))?;
        (
            n.sqrt() * diam,
            (n * (h.f_d + r * m.sqrt() * h.g_d).powi(2)).sqrt(),
        )
    };
    let h_w = (n * (h.f_w + r * m.sqrt() * h.g_w).powi(2)).sqrt();
    let mut hz_sq = 0.0;
    for i in 0..sep.n_agents() {
        hz_sq += sep.constraint_sup_norm(i)?.powi(2);
    }
    let norms = NormBounds {
        b_w,
        b_d,
        b_mu: 0.0,
        b_z: n.sqrt() * r,
        h_w,
        h_d,
        h_mu: 0.0,
        h_z: hz_sq.sqrt(),
    };
    BoundConstants::new(norms, network)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cdoubling {
    pub c_wd: f64,
    pub cbar_wd: f64,
    pub c_muz: f64,
    pub cbar_muz: f64,
}

/// `C = 4(B_a² + B_X²) + 6(H_a² + H_X²) + H_X (3 + σΛ̄) C_u (B_X + 2H_X)` for
/// both block pairs, and `C̄ = √2/(√2−1) · C`.
pub fn cdoubling(c: &BoundConstants) -> Cdoubling {
    let nb = &c.norms;
    let gain = (3.0 + c.network.sigma * c.network.lambda_bar) * c.c_u;
    let pair = |ba: f64, bx: f64, ha: f64, hx: f64| {
        4.0 * (ba * ba + bx * bx) + 6.0 * (ha * ha + hx * hx) + hx * gain * (bx + 2.0 * hx)
    };
    let c_wd = pair(nb.b_w, nb.b_d, nb.h_w, nb.h_d);
    let c_muz = pair(nb.b_mu, nb.b_z, nb.h_mu, nb.h_z);
    Cdoubling {
        c_wd,
        cbar_wd: DOUBLING_FACTOR * c_wd,
        c_muz,
        cbar_muz: DOUBLING_FACTOR * c_muz,
    }
}

/// `(C̄_{w,D} + C̄_{μ,z}) / (2√(t − 1))`, the envelope on
/// `|φ(av_t) − φ(x*)|` where `av_t` averages the first `t − 1` iterates.
pub fn theorem_bound(t: usize, c: &BoundConstants) -> Result<f64, AnalysisError> {
    if t < 2 {
        return Err(AnalysisError::Domain(format!("need t >= 2, got {t}")));
    }
    Ok((c.cbar_wd + c.cbar_muz) / (2.0 * ((t - 1) as f64).sqrt()))
}

/// Envelope for a trace record at `t`, whose average covers iterates
/// `1..=t`.
pub fn envelope_at_record(t: usize, c: &BoundConstants) -> Result<f64, AnalysisError> {
    theorem_bound(t + 1, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssBlockReport {
    pub block: String,
    pub pointwise_ok: bool,
    pub cumulative_ok: bool,
    /// `min_t bound / measured`; infinite when nothing was measured.
    pub min_pointwise_ratio: f64,
    pub min_cumulative_ratio: f64,
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssReport {
    pub checked: usize,
    pub blocks: Vec<IssBlockReport>,
}

impl IssReport {
    pub fn passed(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.pointwise_ok && b.cumulative_ok)
    }
}

fn ratio(bound: f64, measured: f64) -> f64 {
    if measured > 0.0 {
        bound / measured
    } else {
        f64::INFINITY
    }
}

/// Checks the pointwise and cumulative input-to-state bounds on the `D` and
/// `z` disagreement at every recorded step. Inputs are `u_s = η_s g_s`.
pub fn check_iss_bounds(trace: &RunTrace, c: &BoundConstants) -> IssReport {
    check_iss_records(&trace.records, trace.summary.initial_norms, c)
}

/// [`check_iss_bounds`] on bare records; `initial` holds the four block
/// norms of the initial state.
pub fn check_iss_records(
    records: &[StepRecord],
    initial: [f64; 4],
    c: &BoundConstants,
) -> IssReport {
    let b = c.network.b.max(1) as f64;
    let mut blocks = Vec::new();
    for (name, x1) in [("D", initial[1]), ("z", initial[3])] {
        let mut rep = IssBlockReport {
            block: name.to_string(),
            pointwise_ok: true,
            cumulative_ok: true,
            min_pointwise_ratio: f64::INFINITY,
            min_cumulative_ratio: f64::INFINITY,
            violations: Vec::new(),
        };
        for r in records {
            let (dis, cum, in_max, in_sum) = if name == "D" {
                (
                    r.disagreement_d,
                    r.cum_disagreement_d,
                    r.input_max_d,
                    r.input_sum_d,
                )
            } else {
                (
                    r.disagreement_z,
                    r.cum_disagreement_z,
                    r.input_max_z,
                    r.input_sum_z,
                )
            };
            let exponent = ((r.t - 1) as f64 / b).ceil();
            let point_bound = (16.0 / 9.0) * x1 * c.rho.powf(exponent) + c.c_u * in_max;
            let cum_bound = c.c_u * (x1 / 2.0 + in_sum);
            rep.min_pointwise_ratio = rep.min_pointwise_ratio.min(ratio(point_bound, dis));
            rep.min_cumulative_ratio = rep.min_cumulative_ratio.min(ratio(cum_bound, cum));
            let p_ok = dis <= point_bound + BOUND_ABS_TOL;
            let c_ok = cum <= cum_bound + BOUND_ABS_TOL;
            rep.pointwise_ok &= p_ok;
            rep.cumulative_ok &= c_ok;
            if !(p_ok && c_ok) {
                rep.violations.push(r.t);
            }
        }
        blocks.push(rep);
    }
    IssReport {
        checked: records.len(),
        blocks,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub checked: usize,
    pub ok: bool,
    /// `min_t envelope / gap`.
    pub min_ratio: f64,
    pub violations: Vec<usize>,
}

/// Checks `|φ(av) − φ*| ≤ envelope` at every record with `t ≥ 2` that carries
/// a saddle gap.
pub fn check_dominance(records: &[StepRecord], c: &BoundConstants) -> DominanceReport {
    let mut rep = DominanceReport {
        checked: 0,
        ok: true,
        min_ratio: f64::INFINITY,
        violations: Vec::new(),
    };
    for r in records.iter().filter(|r| r.t >= 2) {
        let (Some(gap), Ok(env)) = (r.saddle_gap, envelope_at_record(r.t, c)) else {
            continue;
        };
        rep.checked += 1;
        rep.min_ratio = rep.min_ratio.min(ratio(env, gap));
        if gap > env + BOUND_ABS_TOL {
            rep.ok = false;
            rep.violations.push(r.t);
        }
    }
    rep
}

/// Comparison point of the cumulative evaluation-error check.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Fixed(Blocks),
    /// The running average at the checked step.
    RunningAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeBoundCheck {
    pub t: usize,
    /// `Σ_s φ(x_s) − t φ(w_p, D_p, μ_av, z_av)`.
    pub upper_lhs: f64,
    /// `u(t, w_p, D_p) / 2`.
    pub upper_bound: f64,
    /// `Σ_s φ(x_s) − t φ(w_av, D_av, μ_p, z_p)`.
    pub lower_lhs: f64,
    /// `−u(t, μ_p, z_p) / 2`.
    pub lower_bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeBoundReport {
    pub checks: Vec<CumulativeBoundCheck>,
}

impl CumulativeBoundReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

struct UInputs<'a> {
    n: usize,
    d: usize,
    etas: &'a [f64],
    a: Vec<&'a [f64]>,
    x: Vec<&'a [f64]>,
    ga: Vec<f64>,
    gx: Vec<f64>,
}

/// `u(t, a_p, X_p)` over the first `t` iterates.
fn u_function(inp: &UInputs<'_>, t: usize, a_p: &[f64], x_p: &[f64], gain: f64) -> f64 {
    let mut total = 0.0;
    for s in 1..t {
        let mx = mean_stack(inp.x[s], inp.n, inp.d);
        let w = 1.0 / inp.etas[s] - 1.0 / inp.etas[s - 1];
        total += (dist(inp.a[s], a_p).powi(2) + dist(&mx, x_p).powi(2)) * w;
    }
    total +=
        (2.0 / inp.etas[0]) * (norm_sq(inp.a[0]) + norm_sq(a_p) + norm_sq(inp.x[0]) + norm_sq(x_p));
    let mut sum_gx = 0.0;
    for s in 0..t {
        total += 6.0 * inp.etas[s] * (inp.ga[s].powi(2) + inp.gx[s].powi(2));
        total += 2.0 * gain * inp.gx[s] * disagreement_unchecked(inp.x[s], inp.n, inp.d);
        sum_gx += inp.gx[s];
    }
    total + 2.0 * disagreement_unchecked(x_p, inp.n, inp.d) * sum_gx
}

/// Checks both sides of the cumulative evaluation-error bound at the steps
/// in `times` (1-based, within the stored history).
pub fn check_cumulative_bound(
    trace: &RunTrace,
    problem: &impl SaddleIteration,
    probe: &Probe,
    sigma: f64,
    lambda_bar: f64,
    times: &[usize],
) -> Result<CumulativeBoundReport, AnalysisError> {
    let hist = trace
        .history
        .as_ref()
        .ok_or(AnalysisError::MissingHistory)?;
    let dims = trace.dims;
    if let Probe::Fixed(p) = probe {
        if let Some(block) = infeasible_block(problem.sets(), &dims, p, 1e-10)? {
            return Err(AnalysisError::InfeasibleProbe(block));
        }
    }
    let etas: Vec<f64> = hist.iter().map(|h| h.eta).collect();
    let primal = UInputs {
        n: dims.agents,
        d: dims.d,
        etas: &etas,
        a: hist.iter().map(|h| h.point.w.as_slice()).collect(),
        x: hist.iter().map(|h| h.point.d.as_slice()).collect(),
        ga: hist.iter().map(|h| h.subgrad_norms[0]).collect(),
        gx: hist.iter().map(|h| h.subgrad_norms[1]).collect(),
    };
    let dual = UInputs {
        n: dims.agents,
        d: dims.z,
        etas: &etas,
        a: hist.iter().map(|h| h.point.mu.as_slice()).collect(),
        x: hist.iter().map(|h| h.point.z.as_slice()).collect(),
        ga: hist.iter().map(|h| h.subgrad_norms[2]).collect(),
        gx: hist.iter().map(|h| h.subgrad_norms[3]).collect(),
    };
    let gain = 2.0 + sigma * lambda_bar;

    let mut checks = Vec::new();
    for &t in times {
        if t == 0 || t > hist.len() {
            return Err(AnalysisError::Domain(format!(
                "check time {t} outside the stored history 1..={}",
                hist.len()
            )));
        }
        let tf = t as f64;
        let mut avg = Blocks::zeros(&dims);
        let mut sum_phi = 0.0;
        for h in &hist[..t] {
            sum_phi += h.phi;
            for (dst, src) in [
                (&mut avg.w, &h.point.w),
                (&mut avg.d, &h.point.d),
                (&mut avg.mu, &h.point.mu),
                (&mut avg.z, &h.point.z),
            ] {
                for (a, v) in dst.iter_mut().zip(src) {
                    *a += v / tf;
                }
            }
        }
        let p = match probe {
            Probe::Fixed(p) => p.clone(),
            Probe::RunningAverage => avg.clone(),
        };
        let upper_point = Blocks {
            w: p.w.clone(),
            d: p.d.clone(),
            mu: avg.mu.clone(),
            z: avg.z.clone(),
        };
        let lower_point = Blocks {
            w: avg.w.clone(),
            d: avg.d.clone(),
            mu: p.mu.clone(),
            z: p.z.clone(),
        };
        let upper_lhs = sum_phi - tf * problem.value(&upper_point);
        let lower_lhs = sum_phi - tf * problem.value(&lower_point);
        let upper_bound = u_function(&primal, t, &p.w, &p.d, gain) / 2.0;
        let lower_bound = -u_function(&dual, t, &p.mu, &p.z, gain) / 2.0;
        let scale = 1.0 + sum_phi.abs() + upper_bound.abs() + lower_bound.abs();
        let tol = CUMULATIVE_REL_TOL * scale;
        let ok = upper_lhs <= upper_bound + tol && lower_lhs >= lower_bound - tol;
        checks.push(CumulativeBoundCheck {
            t,
            upper_lhs,
            upper_bound,
            lower_lhs,
            lower_bound,
            ok,
        });
    }
    Ok(CumulativeBoundReport { checks })
}

/// `t = 1, 2, …, 64` followed by powers of two up to `max`, plus `max`.
pub fn check_times(max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=max.min(64)).collect();
    let mut t = 128;
    while t < max {
        out.push(t);
        t *= 2;
    }
    if max > 64 {
        out.push(max);
    }
    out
}

/// Norm of the running average's disagreement versus the average of the
/// per-step disagreements; the former never exceeds the latter.
pub fn averaged_disagreement_gap(points: &[&[f64]], n: usize, d: usize) -> (f64, f64) {
    let t = points.len() as f64;
    let mut avg = vec![0.0; n * d];
    let mut mean_dis = 0.0;
    for p in points {
        for (a, v) in avg.iter_mut().zip(p.iter()) {
            *a += v / t;
        }
        mean_dis += disagreement_unchecked(p, n, d) / t;
    }
    (disagreement_unchecked(&avg, n, d), mean_dis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: usize, b: usize, delta_tilde: f64) -> NetworkParams {
        NetworkParams {
            n,
            b,
            sigma: 0.25,
            lambda_bar: 1.0,
            delta_tilde,
        }
    }

    #[test]
    fn c_u_examples() {
        let v = c_u(0.01, 50, 1).unwrap();
        assert!((v / 3.5556e6 - 1.0).abs() < 1e-4);
        let v2 = c_u(0.5, 2, 1).unwrap();
        assert!((v2 - (32.0 / 9.0) / 0.03125).abs() < 1e-9);
        assert!((v2 - 113.78).abs() < 0.01);
        assert!(c_u(0.01, 50, 2).unwrap() > v);
        assert!(c_u(0.0, 50, 1).is_err());
        assert!(c_u(0.5, 1, 1).is_err());
        assert!(c_u(0.5, 2, 0).is_err());
    }

    #[test]
    fn disagreement_examples() {
        assert_eq!(disagreement(&[1.0, 1.0, 1.0], 3, 1).unwrap(), 0.0);
        assert!((disagreement(&[0.0, 1.0], 2, 1).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(disagreement(&[0.0, 1.0, 2.0], 2, 1).is_err());
        assert_eq!(
            cumulative_disagreement(&[1.0, 2.0, 3.0]),
            vec![1.0, 3.0, 6.0]
        );
    }

    #[test]
    fn cdoubling_structure() {
        let zero = BoundConstants::new(NormBounds::default(), net(2, 1, 0.5)).unwrap();
        assert_eq!((zero.c_wd, zero.c_muz, zero.cbar_wd), (0.0, 0.0, 0.0));
        let nb = NormBounds {
            b_w: 1.0,
            b_d: 2.0,
            h_w: 3.0,
            ..Default::default()
        };
        let c = BoundConstants::new(nb, net(2, 1, 0.5)).unwrap();
        assert_eq!(c.c_wd, 4.0 * 5.0 + 6.0 * 9.0);
        assert!((c.cbar_wd / c.c_wd - DOUBLING_FACTOR).abs() < 1e-15);
    }

    #[test]
    fn theorem_bound_examples() {
        let mut c = BoundConstants::new(NormBounds::default(), net(2, 1, 0.5)).unwrap();
        c.cbar_wd = 1.5;
        c.cbar_muz = 0.5;
        assert_eq!(theorem_bound(2, &c).unwrap(), 1.0);
        assert!(theorem_bound(1, &c).is_err());
        let ratio = theorem_bound(2_000_001, &c).unwrap() / theorem_bound(1_000_001, &c).unwrap();
        assert!((ratio - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn averaged_disagreement_is_dominated() {
        let a = [0.0, 1.0, 3.0];
        let b = [2.0, -1.0, 0.5];
        let (avg, mean) = averaged_disagreement_gap(&[&a, &b], 3, 1);
        assert!(avg <= mean + 1e-15);
    }

    #[test]
    fn check_times_shape() {
        assert_eq!(check_times(3), vec![1, 2, 3]);
        let t = check_times(1000);
        assert_eq!(&t[62..], &[63, 64, 128, 256, 512, 1000]);
    }
}
