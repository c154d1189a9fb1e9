//! Saddle-point subgradient dynamics with Laplacian averaging over
//! time-varying digraphs, the consensus-based algorithm for separable
//! constrained optimization built on them, a distributed protocol bounding
//! the optimal dual set, and runnable checks of the convergence bounds.

pub mod analysis;
pub mod copt;
pub mod dynamics;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod projection;
