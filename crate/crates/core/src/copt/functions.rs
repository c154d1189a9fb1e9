//! Coordinate-separable convex functions used as agent objectives and
//! constraints.

use serde::{Deserialize, Serialize};

use super::CoptError;

/// `f(x) = Σ_k [a_k x_k + ½ q_k x_k² − c_k log(1 + x_k) + e_k |x_k|] + offset`
/// with `q, c, e ≥ 0`.
///
/// Missing coefficient vectors are zero. The `neg_log` terms require
/// `x_k > −1` on the feasible set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateFn {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linear: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quadratic: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub neg_log: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub abs: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

fn coef(v: &[f64], k: usize) -> f64 {
    v.get(k).copied().unwrap_or(0.0)
}

impl CoordinateFn {
    pub fn linear(a: Vec<f64>, offset: f64) -> Self {
        CoordinateFn {
            linear: a,
            offset,
            ..Default::default()
        }
    }

    pub fn neg_log(c: Vec<f64>, offset: f64) -> Self {
        CoordinateFn {
            neg_log: c,
            offset,
            ..Default::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), CoptError> {
        for (name, v, nonneg) in [
            ("linear", &self.linear, false),
            ("quadratic", &self.quadratic, true),
            ("neg_log", &self.neg_log, true),
            ("abs", &self.abs, true),
        ] {
            if !v.is_empty() && v.len() != dim {
                return Err(CoptError::Invalid(format!(
                    "{name} coefficients have length {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|c| !c.is_finite() || (nonneg && *c < 0.0)) {
                return Err(CoptError::Invalid(format!(
                    "{name} coefficients must be finite{}",
                    if nonneg { " and nonnegative" } else { "" }
                )));
            }
        }
        if !self.offset.is_finite() {
            return Err(CoptError::Invalid("offset must be finite".into()));
        }
        Ok(())
    }

    pub fn has_log(&self, k: usize) -> bool {
        coef(&self.neg_log, k) > 0.0
    }

    /// The `k`-th one-dimensional term, without the offset.
    pub fn term(&self, k: usize, x: f64) -> f64 {
        let mut v = coef(&self.linear, k) * x + 0.5 * coef(&self.quadratic, k) * x * x;
        let c = coef(&self.neg_log, k);
        if c > 0.0 {
            v -= if x > -1.0 {
                c * x.ln_1p()
            } else {
                f64::NEG_INFINITY
            };
        }
        v + coef(&self.abs, k) * x.abs()
    }

    fn smooth_derivative(&self, k: usize, x: f64) -> f64 {
        let c = coef(&self.neg_log, k);
        let log_part = if c > 0.0 { c / (1.0 + x) } else { 0.0 };
        coef(&self.linear, k) + coef(&self.quadratic, k) * x - log_part
    }

    /// Right derivative of the `k`-th term.
    pub fn right_derivative(&self, k: usize, x: f64) -> f64 {
        let e = coef(&self.abs, k);
        self.smooth_derivative(k, x) + if x >= 0.0 { e } else { -e }
    }

    /// Left derivative of the `k`-th term.
    pub fn left_derivative(&self, k: usize, x: f64) -> f64 {
        let e = coef(&self.abs, k);
        self.smooth_derivative(k, x) + if x > 0.0 { e } else { -e }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (0..x.len()).map(|k| self.term(k, x[k])).sum::<f64>() + self.offset
    }

    /// A subgradient; the `|·|` kink at zero contributes 0.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                let e = coef(&self.abs, k);
                self.smooth_derivative(k, x[k]) + e * sign0(x[k])
            })
            .collect()
    }

    /// Largest `|f'|` of the `k`-th term on `[lo, hi]`. Derivatives of convex
    /// terms are monotone, so the endpoints suffice.
    pub fn max_abs_derivative(&self, k: usize, lo: f64, hi: f64) -> f64 {
        self.right_derivative(k, lo)
            .abs()
            .max(self.left_derivative(k, hi).abs())
    }

    /// Range `(min, max)` of `f` over the box `[lo, hi]`.
    pub fn range_on_box(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let mut min = self.offset;
        let mut max = self.offset;
        for k in 0..lo.len() {
            let (_, m) = minimize_weighted_term(&[(1.0, self)], k, lo[k], hi[k]);
            min += m;
            max += self.term(k, lo[k]).max(self.term(k, hi[k]));
        }
        (min, max)
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Minimizes `Σ_j λ_j f_j` restricted to coordinate `k` over `[lo, hi]`,
/// with `λ_j ≥ 0`. Returns `(argmin, min value)` of the summed terms.
///
/// The sum is convex in one variable, so its right derivative is
/// nondecreasing: endpoints are returned exactly when the derivative does
/// not change sign, otherwise the root is bracketed by bisection.
pub fn minimize_weighted_term(
    fns: &[(f64, &CoordinateFn)],
    k: usize,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let value = |x: f64| fns.iter().map(|(w, f)| w * f.term(k, x)).sum::<f64>();
    let right = |x: f64| {
        fns.iter()
            .map(|(w, f)| w * f.right_derivative(k, x))
            .sum::<f64>()
    };
    let left = |x: f64| {
        fns.iter()
            .map(|(w, f)| w * f.left_derivative(k, x))
            .sum::<f64>()
    };
    if lo == hi || right(lo) >= 0.0 {
        return (lo, value(lo));
    }
    if left(hi) <= 0.0 {
        return (hi, value(hi));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if right(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let (va, vb) = (value(a), value(b));
    if va <= vb {
        (a, va)
    } else {
        (b, vb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_subgradient() {
        let f = CoordinateFn {
            linear: vec![1.0, -2.0],
            quadratic: vec![2.0, 0.0],
            neg_log: vec![0.0, 1.0],
            abs: vec![0.5, 0.0],
            offset: 0.25,
        };
        let x = [-1.0, 1.0];
        let v = -1.0 + 1.0 + 0.5 - 2.0 - 2f64.ln() + 0.25;
        assert!((f.value(&x) - v).abs() < 1e-15);
        let g = f.subgradient(&x);
        assert_eq!(g, vec![1.0 - 2.0 - 0.5, -2.0 - 0.5]);
    }

    #[test]
    fn validation() {
        assert!(CoordinateFn::neg_log(vec![-1.0], 0.0).validate(1).is_err());
        assert!(CoordinateFn::linear(vec![1.0, 2.0], 0.0)
            .validate(1)
            .is_err());
        assert!(CoordinateFn::linear(vec![-1.0], 0.0).validate(1).is_ok());
    }

    #[test]
    fn one_dimensional_minimization() {
        let g = CoordinateFn::neg_log(vec![0.7], 0.1);
        assert_eq!(minimize_weighted_term(&[(1.0, &g)], 0, 0.0, 1.0).0, 1.0);
        let f = CoordinateFn::linear(vec![1.0], 0.0);
        assert_eq!(minimize_weighted_term(&[(1.0, &f)], 0, -1.0, 1.0).0, -1.0);
        // c·w − z·d·log(1+w) with c = d = 1, z = 1.5: minimizer 0.5.
        let (x, v) = minimize_weighted_term(
            &[(1.0, &f), (1.5, &CoordinateFn::neg_log(vec![1.0], 0.0))],
            0,
            0.0,
            1.0,
        );
        assert!((x - 0.5).abs() < 1e-12);
        assert!((v - (0.5 - 1.5 * 1.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn json_form() {
        let f: CoordinateFn = serde_json::from_str(r#"{"neg_log":[0.3],"offset":0.1}"#).unwrap();
        assert_eq!(f, CoordinateFn::neg_log(vec![0.3], 0.1));
        assert!(serde_json::from_str::<CoordinateFn>(r#"{"cubic":[1]}"#).is_err());
    }
}
