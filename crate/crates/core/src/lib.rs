//! Finite-state mean-field Markov decision processes.
//!
//! The crate solves the cooperative N-agent problem on `S^N`, its
//! reformulation on empirical measures, and the deterministic limit on the
//! simplex. On top of that it builds average-reward optimal decentralized
//! policies (static optimization of the stationary law followed by a
//! detailed-balance kernel and its inversion), and checks convergence with
//! Wasserstein distances.

pub mod error;
pub mod finite;
pub mod instances;
pub mod matrix;
pub mod meanfield;
pub mod metropolis;
pub mod model;
pub mod nagent;
pub mod numeric;
pub mod staticopt;
pub mod transport;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::*;
pub use numeric::{Rational, Scalar};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
