//! Closed convex sets and Euclidean projections onto them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist, norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("dimension mismatch: set has dimension {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid set: {0}")]
    InvalidSet(String),
}

/// A nonempty closed convex set.
///
/// `FullSpace`, `NonnegOrthant` and the two balls adapt to the dimension of the
/// vector they act on; `Box` and `Product` carry their own dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexSet {
    FullSpace,
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    NonnegOrthant,
    CenteredBall {
        r: f64,
    },
    /// `ℝ^m_{≥0} ∩ B̄(0, r)`.
    OrthantBall {
        r: f64,
    },
    Product {
        parts: Vec<ProductPart>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPart {
    pub set: ConvexSet,
    pub dim: usize,
}

impl ConvexSet {
    pub fn interval(lo: f64, hi: f64) -> ConvexSet {
        ConvexSet::Box {
            lower: vec![lo],
            upper: vec![hi],
        }
    }

    pub fn unit_box(dim: usize) -> ConvexSet {
        ConvexSet::Box {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn product(parts: Vec<(ConvexSet, usize)>) -> ConvexSet {
        ConvexSet::Product {
            parts: parts
                .into_iter()
                .map(|(set, dim)| ProductPart { set, dim })
                .collect(),
        }
    }

    /// Checks the descriptor describes a nonempty closed convex set.
    pub fn validate(&self) -> Result<(), ProjectionError> {
        match self {
            ConvexSet::FullSpace | ConvexSet::NonnegOrthant => Ok(()),
            ConvexSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(ProjectionError::InvalidSet(format!(
                        "box bounds have lengths {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                for (k, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !(l.is_finite() && u.is_finite() && l <= u) {
                        return Err(ProjectionError::InvalidSet(format!(
                            "box coordinate {k}: need finite lower <= upper, got [{l}, {u}]"
                        )));
                    }
                }
                Ok(())
            }
            ConvexSet::CenteredBall { r } | ConvexSet::OrthantBall { r } => {
                if r.is_finite() && *r > 0.0 {
                    Ok(())
                } else {
                    Err(ProjectionError::InvalidSet(format!(
                        "radius must be positive and finite, got {r}"
                    )))
                }
            }
            ConvexSet::Product { parts } => {
                for p in parts {
                    p.set.validate()?;
                    if let Some(d) = p.set.fixed_dim() {
                        if d != p.dim {
                            return Err(ProjectionError::InvalidSet(format!(
                                "product part declares dimension {} but the set has {d}",
                                p.dim
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Dimension carried by the descriptor itself, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ConvexSet::Box { lower, .. } => Some(lower.len()),
            ConvexSet::Product { parts } => Some(parts.iter().map(|p| p.dim).sum()),
            _ => None,
        }
    }

    fn check_dim(&self, got: usize) -> Result<(), ProjectionError> {
        match self.fixed_dim() {
            Some(expected) if expected != got => {
                Err(ProjectionError::DimensionMismatch { expected, got })
            }
            _ => Ok(()),
        }
    }

    /// Euclidean projection of `x` onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ProjectionError> {
        let mut y = x.to_vec();
        self.project_in_place(&mut y)?;
        Ok(y)
    }

    pub fn project_in_place(&self, x: &mut [f64]) -> Result<(), ProjectionError> {
        self.check_dim(x.len())?;
        match self {
            ConvexSet::FullSpace => {}
            ConvexSet::Box { lower, upper } => {
                for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
                    *v = v.clamp(*l, *u);
                }
            }
            ConvexSet::NonnegOrthant => {
                for v in x.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            ConvexSet::CenteredBall { r } => scale_into_ball(x, *r),
            ConvexSet::OrthantBall { r } => {
                // The orthant is a closed cone with apex at the ball center, so
                // clipping then radially shrinking gives the exact projection.
                for v in x.iter_mut() {
                    *v = v.max(0.0);
                }
                scale_into_ball(x, *r);
            }
            ConvexSet::Product { parts } => {
                let mut offset = 0;
                for p in parts {
                    p.set.project_in_place(&mut x[offset..offset + p.dim])?;
                    offset += p.dim;
                }
            }
        }
        Ok(())
    }

    /// `‖P(x) − x‖`.
    pub fn residual(&self, x: &[f64]) -> Result<f64, ProjectionError> {
        Ok(dist(&self.project(x)?, x))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, ProjectionError> {
        Ok(self.residual(x)? <= tol)
    }

    /// Diameter of the set in dimension `dim`; `None` when unbounded.
    pub fn diameter(&self, dim: usize) -> Option<f64> {
        match self {
            ConvexSet::FullSpace | ConvexSet::NonnegOrthant => {
                if dim == 0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            ConvexSet::Box { lower, upper } => Some(dist(lower, upper)),
            ConvexSet::CenteredBall { r } => Some(if dim == 0 { 0.0 } else { 2.0 * r }),
            ConvexSet::OrthantBall { r } => Some(match dim {
                0 => 0.0,
                1 => *r,
                _ => r * std::f64::consts::SQRT_2,
            }),
            ConvexSet::Product { parts } => {
                let mut sq = 0.0;
                for p in parts {
                    sq += p.set.diameter(p.dim)?.powi(2);
                }
                Some(sq.sqrt())
            }
        }
    }

    /// Coordinatewise bounding box in dimension `dim`; `None` when unbounded.
    pub fn bounding_box(&self, dim: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ConvexSet::FullSpace | ConvexSet::NonnegOrthant => {
                (dim == 0).then(|| (Vec::new(), Vec::new()))
            }
            ConvexSet::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            ConvexSet::CenteredBall { r } => Some((vec![-r; dim], vec![*r; dim])),
            ConvexSet::OrthantBall { r } => Some((vec![0.0; dim], vec![*r; dim])),
            ConvexSet::Product { parts } => {
                let mut lo = Vec::with_capacity(dim);
                let mut hi = Vec::with_capacity(dim);
                for p in parts {
                    let (l, h) = p.set.bounding_box(p.dim)?;
                    lo.extend(l);
                    hi.extend(h);
                }
                Some((lo, hi))
            }
        }
    }

    /// Largest norm of a point of the set; `None` when unbounded.
    pub fn max_norm(&self, dim: usize) -> Option<f64> {
        match self {
            ConvexSet::CenteredBall { r } | ConvexSet::OrthantBall { r } => {
                Some(if dim == 0 { 0.0 } else { *r })
            }
            _ => {
                let (lo, hi) = self.bounding_box(dim)?;
                Some(
                    lo.iter()
                        .zip(&hi)
                        .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                )
            }
        }
    }
}

fn scale_into_ball(x: &mut [f64], r: f64) {
    let n = norm(x);
    if n > r {
        let s = r / n;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
}

/// Euclidean projection; free-function form of [`ConvexSet::project`].
pub fn project(set: &ConvexSet, x: &[f64]) -> Result<Vec<f64>, ProjectionError> {
    set.project(x)
}

/// `‖P(x) − x‖`; free-function form of [`ConvexSet::residual`].
pub fn residual(set: &ConvexSet, x: &[f64]) -> Result<f64, ProjectionError> {
    set.residual(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_clamps() {
        let s = ConvexSet::interval(0.0, 1.0);
        assert_eq!(s.project(&[1.7]).unwrap(), vec![1.0]);
        assert_eq!(s.residual(&[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn orthant_ball_examples() {
        let s = ConvexSet::OrthantBall { r: 2.0 };
        assert_eq!(s.project(&[-1.0, 3.0]).unwrap(), vec![0.0, 2.0]);
        let s1 = ConvexSet::OrthantBall { r: 1.0 };
        assert_eq!(s1.residual(&[0.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn feasible_points_are_fixed() {
        let sets = [
            ConvexSet::FullSpace,
            ConvexSet::interval(-1.0, 1.0),
            ConvexSet::NonnegOrthant,
            ConvexSet::CenteredBall { r: 1.0 },
            ConvexSet::OrthantBall { r: 1.0 },
        ];
        for s in &sets {
            assert_eq!(s.project(&[0.5]).unwrap(), vec![0.5]);
            assert_eq!(s.residual(&[0.5]).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = ConvexSet::unit_box(2);
        assert_eq!(
            s.project(&[0.0]),
            Err(ProjectionError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        let p = ConvexSet::product(vec![
            (ConvexSet::NonnegOrthant, 2),
            (ConvexSet::FullSpace, 1),
        ]);
        assert!(p.project(&[1.0, 2.0]).is_err());
        assert_eq!(p.project(&[-1.0, 2.0, -3.0]).unwrap(), vec![0.0, 2.0, -3.0]);
    }

    #[test]
    fn validation() {
        assert!(ConvexSet::OrthantBall { r: 0.0 }.validate().is_err());
        assert!(ConvexSet::Box {
            lower: vec![1.0],
            upper: vec![0.0]
        }
        .validate()
        .is_err());
        assert!(ConvexSet::product(vec![(ConvexSet::unit_box(2), 3)])
            .validate()
            .is_err());
        assert!(ConvexSet::unit_box(3).validate().is_ok());
    }

    #[test]
    fn diameters() {
        assert_eq!(ConvexSet::unit_box(1).diameter(1), Some(1.0));
        assert_eq!(ConvexSet::OrthantBall { r: 3.0 }.diameter(1), Some(3.0));
        assert_eq!(ConvexSet::NonnegOrthant.diameter(2), None);
        let p = ConvexSet::product(vec![(ConvexSet::unit_box(1), 1); 4]);
        assert_eq!(p.diameter(4), Some(2.0));
    }

    #[test]
    fn json_tags() {
        let s: ConvexSet = serde_json::from_str(r#"{"type":"orthant_ball","r":3.313}"#).unwrap();
        assert_eq!(s, ConvexSet::OrthantBall { r: 3.313 });
        let b: ConvexSet =
            serde_json::from_str(r#"{"type":"box","lower":[0.0],"upper":[1.0]}"#).unwrap();
        assert_eq!(b, ConvexSet::interval(0.0, 1.0));
    }
}
