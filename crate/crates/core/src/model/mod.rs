//! Domain types and the lifting operations between agent-level and
//! measure-level descriptions.

mod measure;
mod reward;
mod space;
mod transition;

pub use measure::{
    AgentConfiguration, ConditionalPolicy, EmpiricalMeasure, JointMeasure, SimplexVector,
    COMPUTED_TOL, SIMPLEX_TOL,
};
pub use reward::{RewardFn, RewardKind, RewardModel};
pub use space::{validate_distance, AdmissibleActions, FiniteStateSpace, Graph};
pub use transition::{Kernel, KernelFn, NoiseOutcome, TransitionModel};

use crate::error::{input, Error, Result};
use crate::matrix::Matrix;

/// Reward and dynamics of one agent, shared by every solver.
#[derive(Debug, Clone)]
pub struct MeanFieldModel {
    pub transition: TransitionModel,
    pub reward: RewardModel,
}

impl MeanFieldModel {
    pub fn new(transition: TransitionModel, reward: RewardModel) -> Result<Self> {
        if let Some(d) = reward.states() {
            if d != transition.d() {
                return input(format!(
                    "reward defined on {d} states, transitions on {}",
                    transition.d()
                ));
            }
        }
        if let RewardKind::Tabular(r) = reward.kind() {
            if r.cols() != transition.actions().m() {
                return input("tabular reward has the wrong number of actions");
            }
        }
        Ok(Self { transition, reward })
    }

    pub fn d(&self) -> usize {
        self.transition.d()
    }

    pub fn actions(&self) -> &AdmissibleActions {
        self.transition.actions()
    }

    /// Neither reward nor transitions look at the population.
    pub fn is_population_independent(&self) -> bool {
        !self.reward.depends_on_population() && self.transition.is_population_independent()
    }
}

/// Discount factor with a stopping tolerance and an iteration cap.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiscountSpec {
    pub beta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl DiscountSpec {
    pub fn new(beta: f64, tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Parameter(format!("discount factor {beta} not in (0,1)")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Parameter(format!("tolerance {tolerance} must be positive")));
        }
        if max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be positive".into()));
        }
        Ok(Self {
            beta,
            tolerance,
            max_iterations,
        })
    }

    /// Step residual below which the iterate is within `tolerance` of the fixed point.
    pub fn stop_residual(&self) -> f64 {
        self.tolerance * (1.0 - self.beta) / (2.0 * self.beta)
    }
}

/// `μ[x]`: counts of agents per state.
pub fn empirical_measure(config: &AgentConfiguration, d: usize) -> Result<EmpiricalMeasure> {
    let mut counts = vec![0usize; d];
    for (i, &x) in config.states().iter().enumerate() {
        if x >= d {
            return input(format!("agent {i} in state {x}, outside 0..{d}"));
        }
        counts[x] += 1;
    }
    EmpiricalMeasure::from_counts(counts)
}

/// Average of per-agent rewards, each evaluated at the configuration's
/// empirical measure.
pub fn mean_reward(config: &AgentConfiguration, reward: &RewardModel, d: usize) -> Result<f64> {
    let actions = config
        .actions()
        .ok_or_else(|| Error::Input("configuration carries no actions".into()))?;
    let mu = empirical_measure(config, d)?.to_simplex();
    let total: f64 = config
        .states()
        .iter()
        .zip(actions)
        .map(|(&x, &a)| reward.eval(x, a, &mu))
        .sum();
    Ok(total / config.n() as f64)
}

/// `Σ_{x,a} r(x,a,μ) Q(x,a)` after checking that `Q` has first margin `μ`.
pub fn lifted_reward(mu: &SimplexVector, q: &JointMeasure, reward: &RewardModel) -> Result<f64> {
    let residual = validate_joint(q, mu);
    if residual > COMPUTED_TOL {
        return Err(Error::Consistency(format!(
            "joint measure margin differs from the state distribution by {residual}"
        )));
    }
    let qm = q.matrix();
    let mut total = 0.0;
    for x in 0..qm.rows() {
        for a in 0..qm.cols() {
            let w = qm[(x, a)];
            if w != 0.0 {
                total += w * reward.eval(x, a, mu);
            }
        }
    }
    Ok(total)
}

/// `max_x |Σ_a Q(x,a) − μ(x)|`; infinite when the shapes disagree.
pub fn validate_joint(q: &JointMeasure, mu: &SimplexVector) -> f64 {
    let margin = q.margin();
    if margin.len() != mu.len() {
        return f64::INFINITY;
    }
    margin
        .iter()
        .zip(mu.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `P(x, x') = Σ_{a ∈ D(x)} p^{x,a,μ,z⁰}(x') Q̄(a|x)`.
pub fn kernel_from_policy(
    policy: &ConditionalPolicy,
    transition: &TransitionModel,
    mu: &SimplexVector,
    z0: Option<usize>,
) -> Result<Matrix<f64>> {
    let d = transition.d();
    if policy.d() != d || policy.m() != transition.actions().m() || mu.len() != d {
        return input("policy, transition model and distribution sizes disagree");
    }
    let z = transition.outcome_index(z0)?;
    let mut kernel = Matrix::zeros(d, d);
    let mut law = vec![0.0; d];
    for x in 0..d {
        for a in 0..policy.m() {
            let w = policy.prob(x, a);
            if w == 0.0 {
                continue;
            }
            if !transition.actions().contains(x, a) {
                return input(format!("policy uses inadmissible action {a} in state {x}"));
            }
            transition.next_law_into(x, a, mu, z, &mut law);
            for (y, p) in law.iter().enumerate() {
                kernel[(x, y)] += w * p;
            }
        }
    }
    Ok(kernel)
}
