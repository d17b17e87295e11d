use std::fmt;
use std::sync::Arc;

use super::measure::SimplexVector;
use super::space::validate_distance;
use crate::error::{input, Result};
use crate::matrix::Matrix;

/// Per-agent reward `r(x, a, μ)` as a callable.
pub type RewardFn = dyn Fn(usize, usize, &SimplexVector) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum RewardKind {
    /// `r[x][a]`, independent of the population.
    Tabular(Matrix<f64>),
    /// `r(x, μ) = Σ_{x'} Δ(x,x') μ(x')`.
    Spread(Matrix<f64>),
    /// `1{x = rewarded} − 1{|center − mean position| ≤ radius}` where the mean
    /// position is `Σ positions[x] μ(x)`.
    Indicator {
        rewarded: usize,
        positions: Vec<f64>,
        center: f64,
        radius: f64,
    },
    Custom(Arc<RewardFn>),
}

impl fmt::Debug for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardKind::Tabular(r) => f.debug_tuple("Tabular").field(r).finish(),
            RewardKind::Spread(dist) => f.debug_tuple("Spread").field(dist).finish(),
            RewardKind::Indicator { rewarded, positions, center, radius } => f
                .debug_struct("Indicator")
                .field("rewarded", rewarded)
                .field("positions", positions)
                .field("center", center)
                .field("radius", radius)
                .finish(),
            RewardKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// One-stage reward with a recorded bound `C ≥ sup |r|`.
#[derive(Debug, Clone)]
pub struct RewardModel {
    kind: RewardKind,
    bound: f64,
}

impl RewardModel {
    pub fn tabular(r: Matrix<f64>) -> Result<Self> {
        if r.as_slice().iter().any(|v| !v.is_finite()) {
            return input("tabular reward has non-finite entries");
        }
        let bound = r.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            kind: RewardKind::Tabular(r),
            bound,
        })
    }

    pub fn zero(d: usize, m: usize) -> Self {
        Self {
            kind: RewardKind::Tabular(Matrix::zeros(d, m)),
            bound: 0.0,
        }
    }

    pub fn constant(d: usize, m: usize, c: f64) -> Self {
        Self {
            kind: RewardKind::Tabular(Matrix::filled(d, m, c)),
            bound: c.abs(),
        }
    }

    pub fn spread(dist: Matrix<f64>) -> Result<Self> {
        validate_distance(&dist)?;
        let bound = dist.as_slice().iter().fold(0.0_f64, |m, v| m.max(*v));
        Ok(Self {
            kind: RewardKind::Spread(dist),
            bound,
        })
    }

    pub fn indicator(rewarded: usize, positions: Vec<f64>, center: f64, radius: f64) -> Result<Self> {
        if rewarded >= positions.len() || positions.iter().any(|p| !p.is_finite()) {
            return input("indicator reward: rewarded state out of range or bad positions");
        }
        Ok(Self {
            kind: RewardKind::Indicator {
                rewarded,
                positions,
                center,
                radius,
            },
            bound: 1.0,
        })
    }

    pub fn custom(f: Arc<RewardFn>, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return input("custom reward needs a finite nonnegative bound");
        }
        Ok(Self {
            kind: RewardKind::Custom(f),
            bound,
        })
    }

    pub fn kind(&self) -> &RewardKind {
        &self.kind
    }

    /// The recorded `C` with `|r| ≤ C`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn depends_on_population(&self) -> bool {
        !matches!(self.kind, RewardKind::Tabular(_))
    }

    /// Number of states the reward is defined on, when it is fixed by the data.
    pub fn states(&self) -> Option<usize> {
        match &self.kind {
            RewardKind::Tabular(r) => Some(r.rows()),
            RewardKind::Spread(dist) => Some(dist.rows()),
            RewardKind::Indicator { positions, .. } => Some(positions.len()),
            RewardKind::Custom(_) => None,
        }
    }

    pub fn eval(&self, x: usize, a: usize, mu: &SimplexVector) -> f64 {
        match &self.kind {
            RewardKind::Tabular(r) => r[(x, a)],
            RewardKind::Spread(dist) => dist
                .row(x)
                .iter()
                .zip(mu.as_slice())
                .map(|(d, m)| d * m)
                .sum(),
            RewardKind::Indicator {
                rewarded,
                positions,
                center,
                radius,
            } => {
                let mean: f64 = positions.iter().zip(mu.as_slice()).map(|(p, m)| p * m).sum();
                let own = if x == *rewarded { 1.0 } else { 0.0 };
                let crowd = if (center - mean).abs() <= *radius { 1.0 } else { 0.0 };
                own - crowd
            }
            RewardKind::Custom(f) => f(x, a, mu),
        }
    }
}
