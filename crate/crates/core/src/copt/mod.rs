//! Distributed constrained optimization: separable problems, the consensus
//! saddle-point subgradient algorithm on their Lagrangian, and the protocol
//! that bounds the optimal dual set.

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::graph::GraphError;
use crate::projection::ProjectionError;

pub mod functions;
pub mod problem;
pub mod protocol;

pub use functions::CoordinateFn;
pub use problem::{
    build_lagrangian_saddle, cspsg_step, exact_gamma, exact_radius, slater_components, AgentSpec,
    Cspsg, LagrangianOracle, SeparableProblem, SubgradientBounds,
};
pub use protocol::{
    max_agreement_round, min_agreement_round, run_dual_bound_protocol, DualBoundRun,
    ProtocolOptions,
};

#[derive(Debug, Error)]
pub enum CoptError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("operation requires a problem without agreement variables")]
    AgreementVariables,
    #[error("Slater condition not certified: sum of constraints at the candidate is {0:?}")]
    SlaterNotCertified(Vec<f64>),
    #[error("dual radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("protocol did not terminate within {rounds} rounds: {diagnostic}")]
    ProtocolNonTermination { rounds: usize, diagnostic: String },
    #[error("protocol produced non-positive gamma ({0})")]
    NonPositiveGamma(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}
