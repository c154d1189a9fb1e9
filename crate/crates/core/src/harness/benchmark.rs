//! The logarithmic-constraint benchmark:
//! `min Σ_i c_i w_i` s.t. `−Σ_i d_i log(1 + w_i) ≤ −b`, `w_i ∈ [0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::copt::{AgentSpec, CoordinateFn, SeparableProblem};
use crate::projection::ConvexSet;

const MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkInstance {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub b: f64,
}

impl BenchmarkInstance {
    pub fn new(c: Vec<f64>, d: Vec<f64>, b: f64) -> Result<Self, HarnessError> {
        let inst = BenchmarkInstance { c, d, b };
        inst.validate()?;
        Ok(inst)
    }

    /// Draws `c, d` uniformly from `(0, 1]` with a seeded ChaCha stream,
    /// redrawing until the Slater point `w = 1` is strictly feasible.
    pub fn generate(n: usize, b: f64, seed: u64) -> Result<Self, HarnessError> {
        if n == 0 {
            return Err(HarnessError::Invalid(
                "benchmark needs at least one agent".into(),
            ));
        }
        if !b.is_finite() {
            return Err(HarnessError::Invalid(format!(
                "offset b must be finite, got {b}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_DRAWS {
            let c: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
            let d: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
            let inst = BenchmarkInstance { c, d, b };
            if inst.slater_slack() > 0.0 {
                return Ok(inst);
            }
        }
        Err(HarnessError::Invalid(format!(
            "no Slater-feasible draw in {MAX_DRAWS} attempts for N={n}, b={b}"
        )))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.c.is_empty() || self.c.len() != self.d.len() {
            return Err(HarnessError::Invalid(
                "c and d must be nonempty and of equal length".into(),
            ));
        }
        if self.c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(HarnessError::Invalid("costs c_i must be positive".into()));
        }
        if self.d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(HarnessError::Invalid("weights d_i must be positive".into()));
        }
        if !self.b.is_finite() {
            return Err(HarnessError::Invalid("offset b must be finite".into()));
        }
        if self.slater_slack() <= 0.0 {
            return Err(HarnessError::Invalid(format!(
                "Slater condition fails: log(2)·Σd = {} <= b = {}",
                std::f64::consts::LN_2 * self.d.iter().sum::<f64>(),
                self.b
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// `log(2) Σ d_i − b`, the constraint slack at `w = 1`.
    pub fn slater_slack(&self) -> f64 {
        std::f64::consts::LN_2 * self.d.iter().sum::<f64>() - self.b
    }

    /// Radius from the closed-form bound with the exact `γ`:
    /// `N max_j c_j / (log(2) Σ d_i − b)`.
    pub fn formula_radius(&self) -> f64 {
        let c_max = self.c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.n() as f64 * c_max / self.slater_slack()
    }

    /// Agent `i` gets `f^i(w) = c_i w` and `g^i(w) = −d_i log(1 + w) + b/N`.
    pub fn to_separable(&self) -> SeparableProblem {
        let share = self.b / self.n() as f64;
        let agents = self
            .c
            .iter()
            .zip(&self.d)
            .map(|(c, d)| AgentSpec {
                dim: 1,
                set: ConvexSet::unit_box(1),
                objective: CoordinateFn::linear(vec![*c], 0.0),
                constraints: vec![CoordinateFn::neg_log(vec![*d], share)],
            })
            .collect();
        SeparableProblem::new(agents, 0, ConvexSet::FullSpace)
            .expect("benchmark instances are valid separable problems")
    }

    pub fn cost(&self, w: &[f64]) -> f64 {
        self.c.iter().zip(w).map(|(c, x)| c * x).sum()
    }

    /// `b − Σ d_i log(1 + w_i)`; nonpositive when feasible.
    pub fn constraint(&self, w: &[f64]) -> f64 {
        self.b
            - self
                .d
                .iter()
                .zip(w)
                .map(|(d, x)| d * x.ln_1p())
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let a = BenchmarkInstance::generate(50, 5.0, 7).unwrap();
        let b = BenchmarkInstance::generate(50, 5.0, 7).unwrap();
        let c = BenchmarkInstance::generate(50, 5.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.c.iter().chain(&a.d).all(|v| *v > 0.0 && *v <= 1.0));
        assert!(a.slater_slack() > 0.0);
    }

    #[test]
    fn formula_radius_example() {
        // N = 50, max c = 1, Σd = 25, b = 5.
        let mut d = vec![0.5; 50];
        d[0] = 0.5;
        let mut c = vec![0.3; 50];
        c[3] = 1.0;
        let inst = BenchmarkInstance::new(c, d, 5.0).unwrap();
        let expect = 50.0 / (25.0 * std::f64::consts::LN_2 - 5.0);
        assert!((inst.formula_radius() - expect).abs() < 1e-12);
        assert!((inst.formula_radius() - 4.056).abs() < 1e-3);
    }

    #[test]
    fn rejects_infeasible_instances() {
        assert!(BenchmarkInstance::new(vec![1.0], vec![0.1], 5.0).is_err());
        assert!(BenchmarkInstance::new(vec![0.0], vec![1.0], 0.1).is_err());
    }

    #[test]
    fn separable_split() {
        let inst = BenchmarkInstance::new(vec![1.0, 2.0], vec![1.0, 1.0], 0.2).unwrap();
        let sep = inst.to_separable();
        let g = sep.total_constraint(&[0.5, 0.25], &[]);
        assert!((g[0] - inst.constraint(&[0.5, 0.25])).abs() < 1e-15);
        assert_eq!(
            sep.total_objective(&[0.5, 0.25], &[]),
            inst.cost(&[0.5, 0.25])
        );
    }
}
