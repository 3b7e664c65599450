//! Weighted network estimation from graph-metric targets.
//!
//! Observed networks are pushed towards known values of topological metrics
//! (degree, average neighbour degree, transitivity, clustering coefficient,
//! modularity) by projected gradient descent on the squared mismatch. Three
//! schemes are built on that descent:
//!
//! - [`estimators::denoise`] for a noisy observation of one network,
//! - [`estimators::decompose`] for an additive mixture of two networks,
//! - [`estimators::complete`] for a network with missing edge weights.

pub mod error;
pub mod estimators;
pub mod evalio;
pub mod generators;
pub mod gradients;
pub mod io;
pub mod metrics;
pub mod network;

pub use error::{NetError, Result};
pub use estimators::{
    complete, constrained_fit, cost, cost_gradient, decompose, denoise, DecompositionConfig,
    DescentConfig, FitResult, TraceRecord,
};
pub use metrics::{MetricKind, MetricSpec};
pub use network::{project, validate, MissingMask, ModuleAssignment, WeightMatrix};
