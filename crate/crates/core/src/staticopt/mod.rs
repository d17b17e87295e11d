//! Static optimization of the stationary distribution: maximize `r̃(μ)` over
//! the simplex.

mod common_noise;
mod heuristic;
mod market;
mod quadratic;

pub use common_noise::{
    complete_graph_policy, one_step_common_noise_reward, optimize_common_noise, CommonNoiseSolution,
    CommonNoiseSpec, NoiseMoments,
};
pub use heuristic::{maximize_static, project_to_simplex, SearchOptions};
pub use market::{market_objective, market_place_solution, MarketSolution, RectangleMarket};
pub use quadratic::{kkt, maximize_quadratic, quadratic_value, ExactMaximum, MAX_EXACT_DIM};

use crate::error::Result;
use crate::matrix::Matrix;
use crate::model::{validate_distance, SimplexVector};
use crate::numeric::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Every face of the simplex examined; global optimum certified.
    SupportEnumeration,
    /// Multi-start projected gradient; best found, no global certificate.
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Kkt {
        support: Vec<usize>,
        multiplier: f64,
        residual: f64,
        faces_examined: usize,
        singular_faces: usize,
    },
    /// `(start index, final value)` for every start.
    Search { log: Vec<(usize, f64)> },
}

/// Optimal distribution of a static problem.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    pub mu: SimplexVector,
    pub value: f64,
    pub certificate: Certificate,
    /// All maximizers found within `1e-9` of the best value; `mu` is the first.
    pub alternatives: Vec<SimplexVector>,
    pub method: Method,
}

/// `μΔμᵀ`.
pub fn evaluate_spread<T: Scalar>(mu: &[T], dist: &Matrix<T>) -> T {
    quadratic_value(dist, &vec![T::zero(); mu.len()], mu)
}

pub(crate) fn from_exact<T: Scalar>(m: &ExactMaximum<T>) -> Result<StaticSolution> {
    let to_simplex =
        |v: &[T]| SimplexVector::new(v.iter().map(|x| x.to_f64()).collect::<Vec<_>>());
    Ok(StaticSolution {
        mu: to_simplex(&m.mu)?,
        value: m.value.to_f64(),
        certificate: Certificate::Kkt {
            support: m.support.clone(),
            multiplier: m.multiplier.to_f64(),
            residual: m.kkt_residual,
            faces_examined: m.faces_examined,
            singular_faces: m.singular_faces,
        },
        alternatives: m.maximizers.iter().map(|v| to_simplex(v)).collect::<Result<_>>()?,
        method: Method::SupportEnumeration,
    })
}

/// Maximizes `μΔμᵀ`: exact support enumeration up to [`MAX_EXACT_DIM`] states,
/// projected-gradient search beyond.
pub fn maximize_spread(dist: &Matrix<f64>) -> Result<StaticSolution> {
    validate_distance(dist)?;
    let d = dist.rows();
    if d <= MAX_EXACT_DIM {
        from_exact(&maximize_quadratic(dist, &vec![0.0; d])?)
    } else {
        log::warn!("{d} states: falling back to uncertified projected-gradient search");
        let objective = |mu: &[f64]| evaluate_spread(mu, dist);
        maximize_static(&objective, d, &SearchOptions::default())
    }
}

/// Exact rational version of [`maximize_spread`].
pub fn maximize_spread_exact(dist: &Matrix<Rational>) -> Result<ExactMaximum<Rational>> {
    validate_distance(&dist.to_f64())?;
    maximize_quadratic(dist, &vec![Rational::zero(); dist.rows()])
}
