//! Discounted dynamic programming on an explicitly enumerated finite MDP.
//!
//! The N-agent product model, the empirical-measure model and the gridded
//! limit model all reduce to this representation: a list of choices per
//! state, each with a one-stage reward and a sparse next-state law.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::DiscountSpec;

/// Upper limit on the number of (state, choice) pairs built explicitly.
pub const MAX_STATE_ACTION_PAIRS: u128 = 10_000_000;

/// Relative slack under which two choice values count as tied; ties go to the
/// lower choice index.
const TIE_TOL: f64 = 1e-12;

/// Sparse storage: choices of state `s` are `choice_start[s]..choice_start[s+1]`,
/// transitions of choice `c` are `trans_start[c]..trans_start[c+1]`.
#[derive(Debug, Clone, Default)]
pub struct FiniteMdp {
    choice_start: Vec<usize>,
    rewards: Vec<f64>,
    trans_start: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
}

/// A choice while building: reward and next-state law as `(state, prob)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub reward: f64,
    pub next: Vec<(usize, f64)>,
}

/// Result of value iteration.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    /// Index (within the state's choice list) of a maximizing choice.
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
}

impl FiniteMdp {
    /// Assembles the model from per-state choice lists.
    pub fn from_choices(states: Vec<Vec<Choice>>) -> Result<Self> {
        let n_states = states.len();
        let mut mdp = FiniteMdp {
            choice_start: Vec::with_capacity(n_states + 1),
            ..Default::default()
        };
        mdp.choice_start.push(0);
        mdp.trans_start.push(0);
        for (s, choices) in states.into_iter().enumerate() {
            if choices.is_empty() {
                return Err(Error::Input(format!("state {s} has no admissible choice")));
            }
            for c in choices {
                for (t, p) in c.next {
                    if t >= n_states {
                        return Err(Error::Consistency(format!(
                            "state {s}: transition to unknown state {t}"
                        )));
                    }
                    mdp.targets.push(t as u32);
                    mdp.probs.push(p);
                }
                mdp.rewards.push(c.reward);
                mdp.trans_start.push(mdp.targets.len());
            }
            mdp.choice_start.push(mdp.rewards.len());
        }
        Ok(mdp)
    }

    /// Builds states in parallel from a generator.
    pub fn build<F>(n_states: usize, generate: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<Vec<Choice>> + Sync,
    {
        let states: Result<Vec<_>> = (0..n_states).into_par_iter().map(&generate).collect();
        Self::from_choices(states?)
    }

    pub fn num_states(&self) -> usize {
        self.choice_start.len() - 1
    }

    pub fn num_choices(&self, s: usize) -> usize {
        self.choice_start[s + 1] - self.choice_start[s]
    }

    pub fn total_choices(&self) -> usize {
        self.rewards.len()
    }

    pub fn reward(&self, s: usize, k: usize) -> f64 {
        self.rewards[self.choice_start[s] + k]
    }

    /// Next-state law of choice `k` in state `s`.
    pub fn transitions(&self, s: usize, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let c = self.choice_start[s] + k;
        let range = self.trans_start[c]..self.trans_start[c + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.probs[range])
            .map(|(&t, &p)| (t as usize, p))
    }

    /// `r + β Σ p v` for every choice of `s`.
    fn q_value(&self, s: usize, k: usize, v: &[f64], beta: f64) -> f64 {
        let c = self.choice_start[s] + k;
        let mut ev = 0.0;
        for i in self.trans_start[c]..self.trans_start[c + 1] {
            ev += self.probs[i] * v[self.targets[i] as usize];
        }
        self.rewards[c] + beta * ev
    }

    fn best_choice(&self, s: usize, v: &[f64], beta: f64) -> (f64, usize) {
        let mut best = self.q_value(s, 0, v, beta);
        let mut arg = 0;
        for k in 1..self.num_choices(s) {
            let q = self.q_value(s, k, v, beta);
            if q > best + TIE_TOL * best.abs().max(1.0) {
                best = q;
                arg = k;
            }
        }
        (best, arg)
    }

    /// One application of the Bellman optimality operator, with maximizers.
    pub fn bellman(&self, v: &[f64], beta: f64) -> (Vec<f64>, Vec<usize>) {
        assert_eq!(v.len(), self.num_states(), "value vector length");
        (0..self.num_states())
            .into_par_iter()
            .map(|s| self.best_choice(s, v, beta))
            .unzip()
    }

    /// Evaluation operator of a fixed stationary choice per state.
    pub fn policy_step(&self, v: &[f64], policy: &[usize], beta: f64) -> Vec<f64> {
        (0..self.num_states())
            .into_par_iter()
            .map(|s| self.q_value(s, policy[s], v, beta))
            .collect()
    }

    /// Value iteration from `v ≡ 0` until the step residual guarantees the
    /// requested accuracy.
    pub fn value_iterate(&self, spec: &DiscountSpec) -> Result<Solution> {
        self.value_iterate_from(vec![0.0; self.num_states()], spec)
    }

    pub fn value_iterate_from(&self, mut v: Vec<f64>, spec: &DiscountSpec) -> Result<Solution> {
        let stop = spec.stop_residual();
        let mut residual = f64::INFINITY;
        for it in 1..=spec.max_iterations {
            let (next, policy) = self.bellman(&v, spec.beta);
            residual = sup_distance(&next, &v);
            v = next;
            if residual <= stop {
                log::debug!("value iteration converged after {it} sweeps, residual {residual:e}");
                return Ok(Solution {
                    values: v,
                    policy,
                    iterations: it,
                    residual,
                });
            }
        }
        Err(Error::IterationLimit {
            iterations: spec.max_iterations,
            residual,
        })
    }

    /// Value of a stationary choice rule, by iterating its evaluation operator.
    pub fn evaluate_policy(&self, policy: &[usize], spec: &DiscountSpec) -> Result<Vec<f64>> {
        let stop = spec.stop_residual();
        let mut v = vec![0.0; self.num_states()];
        for _ in 0..spec.max_iterations {
            let next = self.policy_step(&v, policy, spec.beta);
            let residual = sup_distance(&next, &v);
            v = next;
            if residual <= stop {
                return Ok(v);
            }
        }
        Err(Error::IterationLimit {
            iterations: spec.max_iterations,
            residual: f64::NAN,
        })
    }
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Checks a size against a capacity guard.
pub fn guard(what: &'static str, required: u128, limit: u128) -> Result<()> {
    if required > limit {
        Err(Error::Capacity {
            what,
            required,
            limit,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> FiniteMdp {
        // State 0: stay (reward 0) or move (reward 1); state 1: stay, reward 2.
        FiniteMdp::from_choices(vec![
            vec![
                Choice { reward: 0.0, next: vec![(0, 1.0)] },
                Choice { reward: 1.0, next: vec![(1, 1.0)] },
            ],
            vec![Choice { reward: 2.0, next: vec![(1, 1.0)] }],
        ])
        .unwrap()
    }

    #[test]
    fn converges_to_closed_form() {
        let spec = DiscountSpec::new(0.5, 1e-12, 1000).unwrap();
        let sol = two_state().value_iterate(&spec).unwrap();
        assert!((sol.values[1] - 4.0).abs() < 1e-12);
        assert!((sol.values[0] - 3.0).abs() < 1e-12);
        assert_eq!(sol.policy, vec![1, 0]);
    }

    #[test]
    fn ties_prefer_lowest_index() {
        let mdp = FiniteMdp::from_choices(vec![vec![
            Choice { reward: 1.0, next: vec![(0, 1.0)] },
            Choice { reward: 1.0, next: vec![(0, 1.0)] },
        ]])
        .unwrap();
        let (_, pol) = mdp.bellman(&[0.0], 0.9);
        assert_eq!(pol, vec![0]);
    }

    #[test]
    fn iteration_limit_reports_residual() {
        let spec = DiscountSpec::new(0.99, 1e-12, 3).unwrap();
        match two_state().value_iterate(&spec) {
            Err(Error::IterationLimit { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected iteration limit, got {other:?}"),
        }
    }

    #[test]
    fn unknown_target_rejected() {
        let r = FiniteMdp::from_choices(vec![vec![Choice { reward: 0.0, next: vec![(3, 1.0)] }]]);
        assert!(r.is_err());
    }
}
