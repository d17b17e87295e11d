use crate::error::{input, Error, Result};
use crate::finite::{guard, Choice, FiniteMdp, MAX_STATE_ACTION_PAIRS};
use crate::model::{empirical_measure, AgentConfiguration, DiscountSpec, MeanFieldModel};

use super::MAX_TABLE_ENTRIES;

/// Index of `states` in base `d`, first agent most significant.
pub fn encode_configuration(states: &[usize], d: usize) -> usize {
    states.iter().fold(0, |acc, &x| acc * d + x)
}

pub fn decode_configuration(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut states = vec![0; n];
    for slot in states.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    states
}

fn table_size(d: usize, n: usize) -> Result<usize> {
    let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    guard("product state table |S|^N", size, MAX_TABLE_ENTRIES)?;
    Ok(size as usize)
}

/// The product MDP on `S^N` with joint actions `D(x_1) × … × D(x_N)`.
#[derive(Debug, Clone)]
pub struct ProductMdp {
    n: usize,
    d: usize,
    action_sets: Vec<Vec<usize>>,
    mdp: FiniteMdp,
}

impl ProductMdp {
    pub fn new(model: &MeanFieldModel, n: usize) -> Result<Self> {
        if n == 0 {
            return input("need at least one agent");
        }
        let d = model.d();
        let size = table_size(d, n)?;
        let actions = model.actions();
        let pairs: u128 = (0..size)
            .map(|i| actions.product_size(&decode_configuration(i, d, n)))
            .sum();
        guard("product state-action pairs", pairs, MAX_STATE_ACTION_PAIRS)?;
        let outcomes = model.transition.outcomes().len();
        let mdp = FiniteMdp::build(size, |idx| {
            let states = decode_configuration(idx, d, n);
            let mu = empirical_measure(&AgentConfiguration::new(states.clone())?, d)?.to_simplex();
            let sets: Vec<&[usize]> = states.iter().map(|&x| actions.of(x)).collect();
            let count = actions.product_size(&states) as usize;
            let mut choices = Vec::with_capacity(count);
            for k in 0..count {
                let acts = decode_joint_action(k, &sets);
                let reward = states
                    .iter()
                    .zip(&acts)
                    .map(|(&x, &a)| model.reward.eval(x, a, &mu))
                    .sum::<f64>()
                    / n as f64;
                let mut next: Vec<(usize, f64)> = Vec::new();
                for z in 0..outcomes {
                    let pz = model.transition.outcomes()[z].prob;
                    if pz == 0.0 {
                        continue;
                    }
                    let mut partial = vec![(0usize, pz)];
                    for (&x, &a) in states.iter().zip(&acts) {
                        let law = model.transition.next_law(x, a, &mu, z);
                        let mut grown = Vec::with_capacity(partial.len() * d);
                        for &(idx, p) in &partial {
                            for (y, &q) in law.iter().enumerate() {
                                if q > 0.0 {
                                    grown.push((idx * d + y, p * q));
                                }
                            }
                        }
                        partial = grown;
                    }
                    next.extend(partial);
                }
                choices.push(Choice {
                    reward,
                    next: merge_sparse(next),
                });
            }
            Ok(choices)
        })?;
        Ok(Self {
            n,
            d,
            action_sets: (0..d).map(|x| actions.of(x).to_vec()).collect(),
            mdp,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_configurations(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    /// The joint action behind choice `k` of configuration `index`.
    pub fn joint_action(&self, index: usize, k: usize) -> Vec<usize> {
        let states = decode_configuration(index, self.d, self.n);
        let sets: Vec<&[usize]> = states.iter().map(|&x| self.action_sets[x].as_slice()).collect();
        decode_joint_action(k, &sets)
    }
}

/// Mixed-radix decoding over the per-agent action sets, first agent most
/// significant, so choice order is lexicographic in the joint action.
fn decode_joint_action(mut k: usize, sets: &[&[usize]]) -> Vec<usize> {
    let mut acts = vec![0; sets.len()];
    for (i, set) in sets.iter().enumerate().rev() {
        acts[i] = set[k % set.len()];
        k /= set.len();
    }
    acts
}

pub(crate) fn merge_sparse(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (i, p) in v {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += p,
            _ => out.push((i, p)),
        }
    }
    out
}

/// `V^N` on `S^N` with a maximizing joint action per configuration.
#[derive(Debug, Clone)]
pub struct ProductValueTable {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub tolerance: f64,
    pub values: Vec<f64>,
    pub actions: Vec<Vec<usize>>,
    pub iterations: usize,
    pub residual: f64,
}

impl ProductValueTable {
    pub fn value(&self, states: &[usize]) -> f64 {
        self.values[encode_configuration(states, self.d)]
    }

    pub fn action(&self, states: &[usize]) -> &[usize] {
        &self.actions[encode_configuration(states, self.d)]
    }
}

/// One exact application of the Bellman operator on `S^N`.
pub fn bellman_product_step(v: &[f64], mdp: &ProductMdp, beta: f64) -> Result<Vec<f64>> {
    if v.len() != mdp.num_configurations() {
        return Err(Error::Consistency(format!(
            "table has {} entries, model has {} configurations",
            v.len(),
            mdp.num_configurations()
        )));
    }
    Ok(mdp.mdp.bellman(v, beta).0)
}

pub fn value_iterate_product(model: &MeanFieldModel, n: usize, spec: &DiscountSpec) -> Result<ProductValueTable> {
    let pm = ProductMdp::new(model, n)?;
    let sol = pm.mdp.value_iterate(spec)?;
    let actions = sol
        .policy
        .iter()
        .enumerate()
        .map(|(i, &k)| pm.joint_action(i, k))
        .collect();
    Ok(ProductValueTable {
        n,
        d: pm.d,
        beta: spec.beta,
        tolerance: spec.tolerance,
        values: sol.values,
        actions,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}
