use std::f64::consts::PI;

use mfmdp::instances::triangle_model;
use mfmdp::{
    empirical_measure, kernel_from_policy, lifted_reward, mean_reward, validate_joint, AdmissibleActions,
    AgentConfiguration, ConditionalPolicy, Graph, JointMeasure, Matrix, RewardModel, SimplexVector, TransitionModel,
};
use proptest::prelude::*;

fn triangle_actions() -> AdmissibleActions {
    AdmissibleActions::new(3, vec![vec![1, 2], vec![0, 2], vec![0, 1]]).unwrap()
}

fn triangle_reward() -> RewardModel {
    RewardModel::indicator(0, vec![1.0, 2.0, 3.0], 1.0, 0.5).unwrap()
}

#[test]
fn five_agents_on_the_triangle() {
    let acts = triangle_actions();
    let cfg = AgentConfiguration::with_actions(vec![0, 1, 2, 0, 2], vec![1, 0, 1, 2, 0], &acts).unwrap();
    let mu = empirical_measure(&cfg, 3).unwrap().to_simplex();
    assert_eq!(mu.as_slice(), &[0.4, 0.2, 0.4]);
    assert!((mean_reward(&cfg, &triangle_reward(), 3).unwrap() - 0.4).abs() < 1e-15);
}

#[test]
fn constant_reward_averages_to_itself() {
    let acts = triangle_actions();
    let cfg = AgentConfiguration::with_actions(vec![0, 1, 1], vec![2, 2, 0], &acts).unwrap();
    let r = RewardModel::constant(3, 3, 1.0);
    assert_eq!(mean_reward(&cfg, &r, 3).unwrap(), 1.0);
}

#[test]
fn indicator_reward_by_hand() {
    // Both agents at position 1: the mean sits at the center, so each agent
    // collects 1 − 1 = 0.
    let acts = triangle_actions();
    let cfg = AgentConfiguration::with_actions(vec![0, 0], vec![1, 2], &acts).unwrap();
    assert_eq!(mean_reward(&cfg, &triangle_reward(), 3).unwrap(), 0.0);
    // Agents at positions 1 and 3: mean 2 is away from 1, agent 0 earns 1.
    let cfg = AgentConfiguration::with_actions(vec![0, 2], vec![1, 0], &acts).unwrap();
    assert_eq!(mean_reward(&cfg, &triangle_reward(), 3).unwrap(), 0.5);
}

#[test]
fn lifted_reward_of_the_five_agent_joint_measure() {
    let acts = triangle_actions();
    let mut q = Matrix::zeros(3, 3);
    for (x, a) in [(0, 1), (0, 2), (1, 0), (2, 0), (2, 1)] {
        q[(x, a)] = 0.2;
    }
    let q = JointMeasure::new(q, &acts).unwrap();
    let mu = SimplexVector::new(vec![0.4, 0.2, 0.4]).unwrap();
    assert_eq!(validate_joint(&q, &mu), 0.0);
    assert!((lifted_reward(&mu, &q, &triangle_reward()).unwrap() - 0.4).abs() < 1e-15);
    let cond = q.disintegrate(&acts).unwrap();
    assert_eq!(cond.row(0), &[0.0, 0.5, 0.5]);
    assert_eq!(cond.row(1), &[1.0, 0.0, 0.0]);
}

#[test]
fn lifted_reward_with_irrational_masses() {
    let acts = triangle_actions();
    let p = 1.0 / PI;
    let mu = SimplexVector::new(vec![p, 0.0, 1.0 - p]).unwrap();
    let mut q = Matrix::zeros(3, 3);
    q[(0, 1)] = p;
    q[(2, 0)] = 0.75 * (1.0 - p);
    q[(2, 1)] = 0.25 * (1.0 - p);
    let q = JointMeasure::new(q, &acts).unwrap();
    assert!(validate_joint(&q, &mu) < 1e-15);
    assert!((lifted_reward(&mu, &q, &triangle_reward()).unwrap() - p).abs() < 1e-15);
}

#[test]
fn point_mass_joint_measure() {
    let model = triangle_model().unwrap();
    let mu = SimplexVector::point_mass(3, 1);
    let mut q = Matrix::zeros(3, 3);
    q[(1, 2)] = 1.0;
    let q = JointMeasure::new(q, model.actions()).unwrap();
    let direct = model.reward.eval(1, 2, &mu);
    assert_eq!(lifted_reward(&mu, &q, &model.reward).unwrap(), direct);
}

#[test]
fn mismatched_margin_is_a_consistency_error() {
    let acts = triangle_actions();
    let mu = SimplexVector::uniform(3);
    let policy = ConditionalPolicy::uniform(&acts);
    let q = JointMeasure::from_policy(&SimplexVector::point_mass(3, 0), &policy).unwrap();
    assert!(validate_joint(&q, &mu) > 0.5);
    assert!(lifted_reward(&mu, &q, &triangle_reward()).is_err());
}

#[test]
fn alpha_intent_forward_substitution() {
    let acts = AdmissibleActions::uniform(3, 3).unwrap();
    let t = TransitionModel::alpha_intent(acts.clone(), 0.8).unwrap();
    let rows = Matrix::from_rows(vec![
        vec![5.0 / 7.0, 2.0 / 7.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    let policy = ConditionalPolicy::new(rows, &acts).unwrap();
    let k = kernel_from_policy(&policy, &t, &SimplexVector::uniform(3), None).unwrap();
    let expected = [0.6, 0.3, 0.1];
    for (got, want) in k.row(0).iter().zip(expected) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn alpha_one_kernel_equals_policy() {
    let acts = AdmissibleActions::from_graph(&Graph::lattice(2, 2).unwrap()).unwrap();
    let t = TransitionModel::alpha_intent(acts.clone(), 1.0).unwrap();
    let policy = ConditionalPolicy::uniform(&acts);
    let k = kernel_from_policy(&policy, &t, &SimplexVector::uniform(4), None).unwrap();
    assert!(k.max_abs_diff(policy.matrix()) < 1e-15);
}

fn simplex(d: usize) -> impl Strategy<Value = SimplexVector> {
    prop::collection::vec(0.0f64..1.0, d).prop_filter_map("positive mass", |w| {
        if w.iter().sum::<f64>() > 1e-3 {
            SimplexVector::normalized(w).ok()
        } else {
            None
        }
    })
}

fn complete_policy(d: usize) -> impl Strategy<Value = ConditionalPolicy> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, d), d).prop_map(move |rows| {
        let acts = AdmissibleActions::uniform(d, d).unwrap();
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect();
        ConditionalPolicy::new(Matrix::from_rows(rows).unwrap(), &acts).unwrap()
    })
}

proptest! {
    #[test]
    fn kernels_are_affine_in_the_policy(
        p0 in complete_policy(4),
        p1 in complete_policy(4),
        mu in simplex(4),
        lambda in 0.0f64..1.0,
        alpha in 0.3f64..1.0,
    ) {
        let t = TransitionModel::alpha_intent(AdmissibleActions::uniform(4, 4).unwrap(), alpha).unwrap();
        let mixed = p0.mix(lambda, &p1).unwrap();
        let k = kernel_from_policy(&mixed, &t, &mu, None).unwrap();
        let k0 = kernel_from_policy(&p0, &t, &mu, None).unwrap();
        let k1 = kernel_from_policy(&p1, &t, &mu, None).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let want = lambda * k0[(x, y)] + (1.0 - lambda) * k1[(x, y)];
                prop_assert!((k[(x, y)] - want).abs() < 1e-12);
            }
        }
        prop_assert!(k.is_row_stochastic(1e-12));
    }

    #[test]
    fn push_forward_stays_on_the_simplex(p in complete_policy(5), mu in simplex(5)) {
        let t = TransitionModel::alpha_intent(AdmissibleActions::uniform(5, 5).unwrap(), 0.7).unwrap();
        let k = kernel_from_policy(&p, &t, &mu, None).unwrap();
        let next = mu.push_forward(&k).unwrap();
        prop_assert!((next.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(next.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn joint_measure_round_trip(p in complete_policy(4), mu in simplex(4)) {
        let acts = AdmissibleActions::uniform(4, 4).unwrap();
        let q = JointMeasure::from_policy(&mu, &p).unwrap();
        prop_assert!(validate_joint(&q, &mu) < 1e-12);
        let back = q.disintegrate(&acts).unwrap();
        for x in 0..4 {
            if mu.get(x) > 1e-9 {
                for a in 0..4 {
                    prop_assert!((back.prob(x, a) - p.prob(x, a)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn empirical_measures_count_agents(states in prop::collection::vec(0usize..4, 1..40)) {
        let cfg = AgentConfiguration::new(states.clone()).unwrap();
        let emp = empirical_measure(&cfg, 4).unwrap();
        prop_assert_eq!(emp.n(), states.len());
        for x in 0..4 {
            prop_assert_eq!(emp.counts()[x], states.iter().filter(|&&s| s == x).count());
        }
        let mu = emp.to_simplex();
        prop_assert!((mu.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_variation_is_a_metric(a in simplex(5), b in simplex(5), c in simplex(5)) {
        prop_assert!(a.total_variation(&a) == 0.0);
        prop_assert!((a.total_variation(&b) - b.total_variation(&a)).abs() < 1e-15);
        prop_assert!(a.total_variation(&c) <= a.total_variation(&b) + b.total_variation(&c) + 1e-12);
        prop_assert!(a.total_variation(&b) <= 1.0 + 1e-12);
    }
}

#[test]
fn rejects_malformed_simplex_vectors() {
    assert!(SimplexVector::new(vec![0.5, 0.4]).is_err());
    assert!(SimplexVector::new(vec![1.2, -0.2]).is_err());
    assert!(SimplexVector::new(vec![f64::NAN, 1.0]).is_err());
    assert!(SimplexVector::new(vec![]).is_err());
}

#[test]
fn inadmissible_actions_rejected() {
    let acts = triangle_actions();
    assert!(AgentConfiguration::with_actions(vec![0], vec![0], &acts).is_err());
    let rows = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
    assert!(ConditionalPolicy::new(rows, &acts).is_err());
}
