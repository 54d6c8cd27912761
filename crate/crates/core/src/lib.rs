//! Metric-induced strength of multi-qubit unitaries.
//!
//! The strength of `U` under a metric `D` is the distance from `U` to the
//! nearest tensor product of single-qubit unitaries. This crate computes
//! upper bounds on it with witnesses, checks the chaining, stability and
//! locality properties on random instances, estimates CNOT-count lower
//! bounds, searches for CNOT constructions from other entangling gates, and
//! renders the Barnsley fern by the chaos game.

pub mod error;
pub mod fern;
pub mod local;
pub mod matrix_io;
pub mod metric;
mod par;
pub mod rng;
pub mod strength;
pub mod synth;
pub mod unitary;

pub use error::{Error, Result};
pub use local::{
    environment, expand, local_overlap, maximize_local_overlap, maximize_local_overlap_from,
    minimize_distance, minimize_distance_from, polar_update, DistanceResult, LocalUnitaryProduct,
    Mat2, OptimizationTrace, OptimizerOptions, OverlapResult,
};
pub use metric::{distance, MetricKind, MetricVariant};
pub use unitary::{
    compose, haar_random_unitary, is_unitary, standard_gate, tensor, CMatrix, StandardGate,
    UnitaryOperator, UNITARITY_TOL,
};
