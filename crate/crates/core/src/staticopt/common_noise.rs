use super::quadratic::{maximize_quadratic, quadratic_value};
use crate::error::{input, Error, Result};
use crate::matrix::Matrix;
use crate::model::{validate_distance, AdmissibleActions, ConditionalPolicy, SimplexVector};
use crate::numeric::Scalar;

/// Finite law of the intended-move success probability `α(z⁰)` on a graph
/// where every state has `gamma` admissible targets.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonNoiseSpec<T = f64> {
    pub alphas: Vec<T>,
    pub probs: Vec<T>,
    pub gamma: usize,
}

/// `m1 = E[(1−α)²]`, `m2 = E[(1−α)(αγ−1)]`, `m3 = E[(αγ−1)²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMoments<T = f64> {
    pub m1: T,
    pub m2: T,
    pub m3: T,
}

impl<T: Scalar> CommonNoiseSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.len() != self.probs.len() {
            return input("common noise needs matching, nonempty alpha and probability lists");
        }
        if self.gamma < 2 {
            return input("common noise needs at least two admissible targets per state");
        }
        if self.probs.iter().any(|p| *p < T::zero()) {
            return input("negative common-noise probability");
        }
        let total = self.probs.iter().cloned().fold(T::zero(), |a, b| a + b);
        if !(total - T::one()).is_negligible(1e-12) {
            return input("common-noise probabilities do not sum to 1");
        }
        if self.alphas.iter().any(|a| *a < T::zero() || *a > T::one()) {
            return input("alpha values must lie in [0,1]");
        }
        Ok(())
    }

    pub fn moments(&self) -> NoiseMoments<T> {
        let g = T::from_int(self.gamma as i64);
        let mut m = NoiseMoments {
            m1: T::zero(),
            m2: T::zero(),
            m3: T::zero(),
        };
        for (a, p) in self.alphas.iter().zip(&self.probs) {
            let u = T::one() - a.clone();
            let v = a.clone() * g.clone() - T::one();
            m.m1 = m.m1 + p.clone() * u.clone() * u.clone();
            m.m2 = m.m2 + p.clone() * u * v.clone();
            m.m3 = m.m3 + p.clone() * v.clone() * v;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommonNoiseSolution<T = f64> {
    /// Optimal post-decision distribution `ν* = μQ̄`.
    pub nu: Vec<T>,
    /// `m1·eΔeᵀ + 2 m2·eΔνᵀ + m3·νΔνᵀ`, i.e. `(γ−1)²` times the expected spread.
    pub objective: T,
    /// Expected next-step spread `E[μ_{n+1}Δμ_{n+1}ᵀ]`.
    pub expected_spread: T,
    pub moments: NoiseMoments<T>,
    pub kkt_residual: f64,
}

fn column_sums<T: Scalar>(dist: &Matrix<T>) -> Vec<T> {
    dist.left_mul(&vec![T::one(); dist.rows()])
}

fn total<T: Scalar>(v: &[T]) -> T {
    v.iter().cloned().fold(T::zero(), |a, b| a + b)
}

/// `(γ−1)² E[μ_{n+1}Δμ_{n+1}ᵀ]` for the post-decision distribution `nu`,
/// with `e` the all-ones vector. This expansion presumes every state can
/// reach every state (complete graph, `γ = d`).
fn scaled_objective<T: Scalar>(dist: &Matrix<T>, m: &NoiseMoments<T>, nu: &[T]) -> T {
    let e_dist = column_sums(dist);
    let constant = m.m1.clone() * total(&e_dist);
    let linear: Vec<T> = e_dist
        .iter()
        .map(|v| T::from_int(2) * m.m2.clone() * v.clone())
        .collect();
    let h = dist.scale(&m.m3);
    constant + quadratic_value(&h, &linear, nu)
}

/// Maximizes the expected next-step spread under common noise over the
/// post-decision distribution `ν`, by exact support enumeration.
pub fn optimize_common_noise<T: Scalar>(
    dist: &Matrix<T>,
    spec: &CommonNoiseSpec<T>,
) -> Result<CommonNoiseSolution<T>> {
    validate_distance(&dist.to_f64())?;
    spec.validate()?;
    let m = spec.moments();
    let e_dist = column_sums(dist);
    let linear: Vec<T> = e_dist
        .iter()
        .map(|v| T::from_int(2) * m.m2.clone() * v.clone())
        .collect();
    let h = dist.scale(&m.m3);
    let best = maximize_quadratic(&h, &linear)?;
    let objective = scaled_objective(dist, &m, &best.mu);
    let g1 = T::from_int(spec.gamma as i64 - 1);
    Ok(CommonNoiseSolution {
        expected_spread: objective.clone() / (g1.clone() * g1),
        nu: best.mu,
        objective,
        moments: m,
        kkt_residual: best.kkt_residual,
    })
}

/// Expected spread one step after applying `policy` (rows `Q̄(·|x)`) to `mu`.
pub fn one_step_common_noise_reward<T: Scalar>(
    mu: &[T],
    policy: &Matrix<T>,
    dist: &Matrix<T>,
    spec: &CommonNoiseSpec<T>,
) -> Result<T> {
    spec.validate()?;
    if policy.rows() != mu.len() || policy.cols() != dist.rows() {
        return input("policy, distribution and distance sizes disagree");
    }
    let nu = policy.left_mul(mu);
    let g1 = T::from_int(spec.gamma as i64 - 1);
    Ok(scaled_objective(dist, &spec.moments(), &nu) / (g1.clone() * g1))
}

/// Policy whose every row is `nu`, so that `μQ̄ = ν` for every `μ`. Requires
/// every state to be an admissible target from every state.
pub fn complete_graph_policy(nu: &SimplexVector, actions: &AdmissibleActions) -> Result<ConditionalPolicy> {
    if !actions.is_complete() {
        return Err(Error::Infeasible(
            "identical-row policy needs every state admissible from every state".into(),
        ));
    }
    if nu.len() != actions.d() {
        return input("target distribution has the wrong number of states");
    }
    let rows = Matrix::from_fn(actions.d(), actions.m(), |_, a| nu.get(a));
    ConditionalPolicy::new(rows, actions)
}
