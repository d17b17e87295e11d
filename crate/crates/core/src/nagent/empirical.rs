use std::collections::HashMap;

use crate::error::{input, Error, Result};
use crate::finite::{guard, Choice, FiniteMdp, MAX_STATE_ACTION_PAIRS};
use crate::matrix::Matrix;
use crate::model::{
    AdmissibleActions, DiscountSpec, EmpiricalMeasure, JointMeasure, MeanFieldModel, SimplexVector,
};

use super::product::{decode_configuration, merge_sparse, ProductValueTable};
use super::MAX_TABLE_ENTRIES;

/// All vectors of `parts` nonnegative integers summing to `total`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut current = vec![0; parts];
    fill(total, 0, &mut current, &mut out);
    out
}

fn fill(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for k in 0..=remaining {
        current[pos] = k;
        fill(remaining - k, pos + 1, current, out);
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `C(N+d−1, d−1)`, the number of empirical measures of `N` agents on `d` states.
fn measure_count(n: usize, d: usize) -> u128 {
    binomial(n + d - 1, d - 1)
}

/// Joint action counts `k(x,a)`: for each state, one composition of its agents
/// over `D(x)`.
fn hat_action_counts(counts: &[usize], actions: &AdmissibleActions) -> Vec<Vec<Vec<usize>>> {
    let per_state: Vec<Vec<Vec<usize>>> = counts
        .iter()
        .enumerate()
        .map(|(x, &c)| {
            let set = actions.of(x);
            compositions(c, set.len())
                .into_iter()
                .map(|comp| {
                    let mut row = vec![0; actions.m()];
                    for (&a, k) in set.iter().zip(comp) {
                        row[a] = k;
                    }
                    row
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for rows in per_state {
        let mut grown = Vec::with_capacity(out.len() * rows.len());
        for prefix in &out {
            for row in &rows {
                let mut next = prefix.clone();
                next.push(row.clone());
                grown.push(next);
            }
        }
        out = grown;
    }
    out
}

/// The admissible joint empirical measures `D̂(μ)`.
pub fn enumerate_hat_actions(mu: &EmpiricalMeasure, actions: &AdmissibleActions) -> Result<Vec<JointMeasure>> {
    if mu.d() != actions.d() {
        return input("empirical measure and action sets differ in the number of states");
    }
    let n = mu.n() as f64;
    hat_action_counts(mu.counts(), actions)
        .into_iter()
        .map(|k| {
            let q = Matrix::from_fn(actions.d(), actions.m(), |x, a| k[x][a] as f64 / n);
            JointMeasure::new(q, actions)
        })
        .collect()
}

/// Law of the occupation counts of `k` agents sent independently through `law`,
/// as `(counts, prob)` pairs.
fn multinomial(k: usize, law: &[f64]) -> Vec<(Vec<usize>, f64)> {
    let support: Vec<usize> = (0..law.len()).filter(|&y| law[y] > 0.0).collect();
    compositions(k, support.len())
        .into_iter()
        .map(|comp| {
            let mut counts = vec![0; law.len()];
            let mut prob = 1.0;
            let mut left = k;
            for (&y, c) in support.iter().zip(comp) {
                counts[y] = c;
                prob *= binomial(left, c) as f64 * law[y].powi(c as i32);
                left -= c;
            }
            (counts, prob)
        })
        .collect()
}

/// The MDP on `P_N(S)`.
#[derive(Debug, Clone)]
pub struct EmpiricalMdp {
    n: usize,
    d: usize,
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    joint_counts: Vec<Vec<Vec<Vec<usize>>>>,
    mdp: FiniteMdp,
}

impl EmpiricalMdp {
    pub fn new(model: &MeanFieldModel, n: usize) -> Result<Self> {
        if n == 0 {
            return input("need at least one agent");
        }
        let d = model.d();
        guard("empirical state table |P_N(S)|", measure_count(n, d), MAX_TABLE_ENTRIES)?;
        let states = compositions(n, d);
        let index: HashMap<Vec<usize>, usize> =
            states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let actions = model.actions();
        let joint_counts: Vec<Vec<Vec<Vec<usize>>>> =
            states.iter().map(|c| hat_action_counts(c, actions)).collect();
        let pairs: u128 = joint_counts.iter().map(|j| j.len() as u128).sum();
        guard("empirical state-action pairs", pairs, MAX_STATE_ACTION_PAIRS)?;

        let outcomes = model.transition.outcomes();
        let mdp = FiniteMdp::build(states.len(), |s| {
            let counts = &states[s];
            let mu = EmpiricalMeasure::from_counts(counts.clone())?.to_simplex();
            let mut choices = Vec::with_capacity(joint_counts[s].len());
            for k in &joint_counts[s] {
                let mut reward = 0.0;
                for x in 0..d {
                    for (a, &c) in k[x].iter().enumerate() {
                        if c > 0 {
                            reward += c as f64 * model.reward.eval(x, a, &mu);
                        }
                    }
                }
                reward /= n as f64;
                let mut next = Vec::new();
                for (z, outcome) in outcomes.iter().enumerate() {
                    if outcome.prob == 0.0 {
                        continue;
                    }
                    for (counts_next, p) in next_counts_law(k, model, &mu, z) {
                        let t = *index.get(&counts_next).ok_or_else(|| {
                            Error::Numerical("next occupation counts do not sum to N".into())
                        })?;
                        next.push((t, outcome.prob * p));
                    }
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
            states,
            index,
            joint_counts,
            mdp,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn index_of(&self, counts: &[usize]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    /// The joint measure of choice `k` in state `s`.
    pub fn joint_measure(&self, s: usize, k: usize, actions: &AdmissibleActions) -> Result<JointMeasure> {
        let counts = &self.joint_counts[s][k];
        let q = Matrix::from_fn(self.d, actions.m(), |x, a| counts[x][a] as f64 / self.n as f64);
        JointMeasure::new(q, actions)
    }
}

/// Distribution of next occupation counts given agent counts per (x, a):
/// a convolution of one multinomial per occupied pair.
fn next_counts_law(
    k: &[Vec<usize>],
    model: &MeanFieldModel,
    mu: &SimplexVector,
    z: usize,
) -> Vec<(Vec<usize>, f64)> {
    let d = model.d();
    let mut acc: HashMap<Vec<usize>, f64> = HashMap::new();
    acc.insert(vec![0; d], 1.0);
    for (x, row) in k.iter().enumerate() {
        for (a, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let law = model.transition.next_law(x, a, mu, z);
            let step = multinomial(c, &law);
            let mut grown: HashMap<Vec<usize>, f64> = HashMap::with_capacity(acc.len() * step.len());
            for (base, p) in &acc {
                for (add, q) in &step {
                    let key: Vec<usize> = base.iter().zip(add).map(|(u, v)| u + v).collect();
                    *grown.entry(key).or_insert(0.0) += p * q;
                }
            }
            acc = grown;
        }
    }
    let mut out: Vec<_> = acc.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// `J^N` on empirical measures with a maximizing joint measure per state.
#[derive(Debug, Clone)]
pub struct EmpiricalValueTable {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub tolerance: f64,
    pub states: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    pub maximizers: Vec<JointMeasure>,
    pub iterations: usize,
    pub residual: f64,
    index: HashMap<Vec<usize>, usize>,
}

impl EmpiricalValueTable {
    pub fn value(&self, counts: &[usize]) -> Option<f64> {
        self.index.get(counts).map(|&i| self.values[i])
    }
}

pub fn value_iterate_empirical(model: &MeanFieldModel, n: usize, spec: &DiscountSpec) -> Result<EmpiricalValueTable> {
    let em = EmpiricalMdp::new(model, n)?;
    let sol = em.mdp.value_iterate(spec)?;
    let maximizers = sol
        .policy
        .iter()
        .enumerate()
        .map(|(s, &k)| em.joint_measure(s, k, model.actions()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalValueTable {
        n,
        d: em.d,
        beta: spec.beta,
        tolerance: spec.tolerance,
        states: em.states,
        values: sol.values,
        maximizers,
        iterations: sol.iterations,
        residual: sol.residual,
        index: em.index,
    })
}

/// `max_x |V^N(x) − J^N(μ[x])|` over all configurations.
pub fn check_equivalence(v: &ProductValueTable, j: &EmpiricalValueTable) -> Result<f64> {
    if v.n != j.n || v.d != j.d || v.beta != j.beta {
        return Err(Error::Consistency(format!(
            "tables disagree: N {} vs {}, d {} vs {}, beta {} vs {}",
            v.n, j.n, v.d, j.d, v.beta, j.beta
        )));
    }
    let mut worst = 0.0_f64;
    for (i, &vx) in v.values.iter().enumerate() {
        let states = decode_configuration(i, v.d, v.n);
        let mut counts = vec![0; v.d];
        for x in states {
            counts[x] += 1;
        }
        let jx = j
            .value(&counts)
            .ok_or_else(|| Error::Consistency(format!("no empirical entry for counts {counts:?}")))?;
        worst = worst.max((vx - jx).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(5, 3).len(), 21);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
        assert_eq!(measure_count(5, 3), 21);
    }

    #[test]
    fn multinomial_sums_to_one() {
        let law = [0.2, 0.0, 0.8];
        let total: f64 = multinomial(4, &law).iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(multinomial(4, &law).iter().all(|(c, _)| c[1] == 0));
    }

    #[test]
    fn hat_action_count_for_two_states() {
        let acts = AdmissibleActions::uniform(2, 2).unwrap();
        let mu = EmpiricalMeasure::from_counts(vec![1, 1]).unwrap();
        assert_eq!(enumerate_hat_actions(&mu, &acts).unwrap().len(), 4);
    }
}
