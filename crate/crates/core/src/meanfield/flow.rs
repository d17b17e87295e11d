use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Result};
use crate::model::{kernel_from_policy, ConditionalPolicy, RewardModel, SimplexVector, TransitionModel};

/// `μ P^{Q̄,μ,z⁰}`.
pub fn flow_step(
    mu: &SimplexVector,
    policy: &ConditionalPolicy,
    transition: &TransitionModel,
    z0: Option<usize>,
) -> Result<SimplexVector> {
    mu.push_forward(&kernel_from_policy(policy, transition, mu, z0)?)
}

/// Decision rule applied at each step.
#[derive(Clone, Copy)]
pub enum Schedule<'a> {
    Stationary(&'a ConditionalPolicy),
    /// `(step, μ_k) ↦ Q̄_k`.
    Feedback(&'a (dyn Fn(usize, &SimplexVector) -> Result<ConditionalPolicy> + Sync)),
}

impl Schedule<'_> {
    pub fn policy_at(&self, k: usize, mu: &SimplexVector) -> Result<ConditionalPolicy> {
        match self {
            Schedule::Stationary(p) => Ok((*p).clone()),
            Schedule::Feedback(f) => f(k, mu),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `μ_0, …, μ_steps`.
    pub measures: Vec<SimplexVector>,
    /// Common-noise outcome index driving each move.
    pub noise: Vec<Option<usize>>,
}

/// Iterates [`flow_step`]. Models with common noise need `noise_seed`; the
/// outcomes are drawn from ChaCha8 stream 0 keyed by it.
pub fn flow(
    mu0: &SimplexVector,
    schedule: Schedule<'_>,
    transition: &TransitionModel,
    steps: usize,
    noise_seed: Option<u64>,
) -> Result<Trajectory> {
    if mu0.len() != transition.d() {
        return input("initial distribution has the wrong number of states");
    }
    let mut rng = match (transition.has_common_noise(), noise_seed) {
        (true, None) => return input("model has common noise; a noise seed is required"),
        (true, Some(s)) => {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            r.set_stream(0);
            Some(r)
        }
        (false, _) => None,
    };
    let cdf: Vec<f64> = transition
        .outcomes()
        .iter()
        .scan(0.0, |acc, o| {
            *acc += o.prob;
            Some(*acc)
        })
        .collect();
    // A fixed policy on population-independent dynamics has a fixed kernel.
    let fixed = match (schedule, transition.is_population_independent(), &rng) {
        (Schedule::Stationary(p), true, None) => Some(kernel_from_policy(p, transition, mu0, None)?),
        _ => None,
    };
    let mut measures = Vec::with_capacity(steps + 1);
    let mut noise = Vec::with_capacity(steps);
    measures.push(mu0.clone());
    for k in 0..steps {
        let mu = &measures[k];
        let next = if let Some(p) = &fixed {
            noise.push(None);
            mu.push_forward(p)?
        } else {
            let z = match rng.as_mut() {
                Some(r) => {
                    let u = r.gen::<f64>();
                    Some(cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1))
                }
                None => None,
            };
            noise.push(z);
            let policy = schedule.policy_at(k, mu)?;
            flow_step(mu, &policy, transition, z)?
        };
        measures.push(next);
    }
    Ok(Trajectory { measures, noise })
}

/// `r̃(μ, μ⊗Q̄) = Σ_x μ(x) Σ_a Q̄(a|x) r(x,a,μ)`.
pub fn policy_reward(mu: &SimplexVector, policy: &ConditionalPolicy, reward: &RewardModel) -> f64 {
    let mut total = 0.0;
    for x in 0..mu.len() {
        let w = mu.get(x);
        if w == 0.0 {
            continue;
        }
        for (a, &q) in policy.row(x).iter().enumerate() {
            if q != 0.0 {
                total += w * q * reward.eval(x, a, mu);
            }
        }
    }
    total
}

/// Lifted reward at every step of a trajectory.
pub fn flow_rewards(traj: &Trajectory, schedule: Schedule<'_>, reward: &RewardModel) -> Result<Vec<f64>> {
    traj.measures
        .iter()
        .enumerate()
        .map(|(k, mu)| Ok(policy_reward(mu, &schedule.policy_at(k, mu)?, reward)))
        .collect()
}
