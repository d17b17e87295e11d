//! Wasserstein-1 distances on finite metric spaces and on `[0,1]`, ergodicity
//! diagnostics for kernels, and a contraction harness for a linear mean-field
//! model on the unit interval.

mod ergodic;
mod linear;
mod one_dim;
mod simplex;

pub use ergodic::{ergodicity_estimate, ErgodicityReport};
pub use linear::{contraction_check, ContractionReport, LinearMFModel, PolicyFamily};
pub use one_dim::{wasserstein_1d, AtomMeasure};
pub use simplex::{transport_plan, wasserstein_finite, FiniteMetric, TransportResult};
