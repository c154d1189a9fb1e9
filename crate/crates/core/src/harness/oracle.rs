//! Centralized reference solution of the benchmark through its scalar dual.

use serde::{Deserialize, Serialize};

use super::benchmark::BenchmarkInstance;
use super::HarnessError;
use crate::linalg::golden_section_max;

pub const GOLDEN_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `|q′(z*)|` when `z* > 0`; `max(0, q′(0))` otherwise.
    pub stationarity: f64,
    /// `max(0, b − Σ d_i log(1 + w_i*))`.
    pub primal_violation: f64,
    /// `|z* (b − Σ d_i log(1 + w_i*))|`.
    pub complementarity: f64,
    /// `Σ c_i w_i* − q(z*)`; nonnegative up to rounding by weak duality.
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub w: Vec<f64>,
    pub z: f64,
    /// Optimal value `Σ c_i w_i*`.
    pub value: f64,
    pub dual_value: f64,
    pub constraint_active: bool,
    pub kkt: KktResiduals,
}

/// `argmin_{w ∈ [0,1]} c w − z d log(1 + w) = clip(z d / c − 1, 0, 1)`.
pub fn inner_minimizer(c: f64, d: f64, z: f64) -> f64 {
    (z * d / c - 1.0).clamp(0.0, 1.0)
}

/// `q(z) = Σ_i min_w (c_i w − z d_i log(1 + w)) + z b`.
pub fn dual_value(inst: &BenchmarkInstance, z: f64) -> f64 {
    inst.c
        .iter()
        .zip(&inst.d)
        .map(|(c, d)| {
            let w = inner_minimizer(*c, *d, z);
            c * w - z * d * w.ln_1p()
        })
        .sum::<f64>()
        + z * inst.b
}

/// `q′(z) = b − Σ_i d_i log(1 + w_i(z))`.
pub fn dual_derivative(inst: &BenchmarkInstance, z: f64) -> f64 {
    inst.b
        - inst
            .c
            .iter()
            .zip(&inst.d)
            .map(|(c, d)| d * inner_minimizer(*c, *d, z).ln_1p())
            .sum::<f64>()
}

/// Maximizes the concave dual over `[0, z_max]` by golden-section search,
/// then recovers the primal point from the inner minimizers.
///
/// The golden-section bracket locates `z*` only to about `√ε` relative
/// accuracy because `q` is flat at its maximum; the result is polished by
/// bisection on the monotone `q′` inside the final bracket, when it changes
/// sign there.
pub fn oracle_solve(
    inst: &BenchmarkInstance,
    tol: f64,
    z_max: f64,
) -> Result<OracleSolution, HarnessError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(HarnessError::Invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(HarnessError::Invalid(format!(
            "search bound must be positive, got {z_max}"
        )));
    }
    if inst.c.is_empty() || inst.c.len() != inst.d.len() {
        return Err(HarnessError::Invalid(
            "c and d must be nonempty and of equal length".into(),
        ));
    }

    let z = if dual_derivative(inst, 0.0) <= 0.0 {
        0.0
    } else {
        if dual_derivative(inst, z_max) > 0.0 {
            return Err(HarnessError::Oracle(format!(
                "dual maximizer lies beyond the search bound {z_max}"
            )));
        }
        let (z0, _) = golden_section_max(|z| dual_value(inst, z), 0.0, z_max, GOLDEN_ITERS);
        let width = (z_max * 1e-6).max(tol);
        let (mut a, mut b) = ((z0 - width).max(0.0), (z0 + width).min(z_max));
        if dual_derivative(inst, a) > 0.0 && dual_derivative(inst, b) <= 0.0 {
            for _ in 0..GOLDEN_ITERS {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if dual_derivative(inst, m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            if dual_derivative(inst, a).abs() <= dual_derivative(inst, b).abs() {
                a
            } else {
                b
            }
        } else {
            z0
        }
    };

    let w: Vec<f64> = inst
        .c
        .iter()
        .zip(&inst.d)
        .map(|(c, d)| inner_minimizer(*c, *d, z))
        .collect();
    let value = inst.cost(&w);
    let dual = dual_value(inst, z);
    let g = inst.constraint(&w);
    let stationarity = if z > 0.0 {
        dual_derivative(inst, z).abs()
    } else {
        dual_derivative(inst, 0.0).max(0.0)
    };
    Ok(OracleSolution {
        w,
        z,
        value,
        dual_value: dual,
        constraint_active: z > 0.0,
        kkt: KktResiduals {
            stationarity,
            primal_violation: g.max(0.0),
            complementarity: (z * g).abs(),
            duality_gap: value - dual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_instance() {
        let inst =
            BenchmarkInstance::new(vec![1.0, 1.0], vec![1.0, 1.0], 2.0 * 1.5f64.ln()).unwrap();
        let sol = oracle_solve(&inst, 1e-12, 10.0).unwrap();
        assert!((sol.z - 1.5).abs() < 1e-9);
        assert!((sol.w[0] - 0.5).abs() < 1e-9 && (sol.w[1] - 0.5).abs() < 1e-9);
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!(sol.kkt.duality_gap.abs() < 1e-9);
    }

    #[test]
    fn inner_minimizer_value() {
        let w = inner_minimizer(1.0, 1.0, 1.5);
        assert_eq!(w, 0.5);
        let v = w - 1.5 * w.ln_1p();
        assert!((v + 0.10820).abs() < 1e-5);
    }

    #[test]
    fn slack_constraint_gives_zero_multiplier() {
        let inst = BenchmarkInstance {
            c: vec![1.0, 0.5],
            d: vec![0.3, 0.2],
            b: -0.1,
        };
        let sol = oracle_solve(&inst, 1e-10, 5.0).unwrap();
        assert_eq!(sol.z, 0.0);
        assert_eq!(sol.w, vec![0.0, 0.0]);
        assert!(!sol.constraint_active);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let inst = BenchmarkInstance::new(vec![1.0], vec![1.0], 0.1).unwrap();
        assert!(oracle_solve(&inst, 0.0, 1.0).is_err());
    }
}
