use crate::error::{input, Result};
use crate::finite::{guard, Choice, FiniteMdp, Solution, MAX_STATE_ACTION_PAIRS};
use crate::matrix::Matrix;
use crate::model::{ConditionalPolicy, DiscountSpec, JointMeasure, MeanFieldModel, SimplexVector};
use crate::nagent::compositions;

use super::grid::SimplexGrid;

/// Discounted value of the limit model on a simplex grid.
#[derive(Debug, Clone)]
pub struct LimitValueTable {
    pub grid: SimplexGrid,
    pub beta: f64,
    pub values: Vec<f64>,
    /// Maximizing `Q̄` per grid point (rows of unoccupied states are the first
    /// grid row on `D(x)`).
    pub policies: Vec<ConditionalPolicy>,
    pub iterations: usize,
    pub residual: f64,
}

impl LimitValueTable {
    /// Value at the grid point nearest to `mu`.
    pub fn value_at(&self, mu: &SimplexVector) -> f64 {
        self.values[self.grid.project(mu.as_slice())]
    }

    /// `μ ⊗ Q̄` at grid point `i`.
    pub fn maximizer(&self, i: usize) -> JointMeasure {
        JointMeasure::from_policy(&self.grid.point(i), &self.policies[i])
            .expect("grid point and policy share a shape")
    }

    /// CSV: grid coordinates, value, then `Q̄(a|x)` for every pair.
    pub fn to_csv(&self) -> String {
        let d = self.grid.d();
        let m = self.policies.first().map_or(0, |p| p.m());
        let mut out = String::new();
        let mut header: Vec<String> = (0..d).map(|x| format!("mu_{x}")).collect();
        header.push("value".into());
        for x in 0..d {
            for a in 0..m {
                header.push(format!("q_{x}_{a}"));
            }
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.grid.len() {
            let mut row: Vec<String> = self.grid.point(i).as_slice().iter().map(|v| v.to_string()).collect();
            row.push(self.values[i].to_string());
            row.extend(self.policies[i].matrix().as_slice().iter().map(|v| v.to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Candidate rows `Q̄(·|x)` on `D(x)` with masses in multiples of `1/resolution`.
fn row_options(model: &MeanFieldModel, x: usize, resolution: usize) -> Vec<Vec<f64>> {
    let acts = model.actions();
    let set = acts.of(x);
    compositions(resolution, set.len())
        .into_iter()
        .map(|c| {
            let mut row = vec![0.0; acts.m()];
            for (&a, k) in set.iter().zip(c) {
                row[a] = k as f64 / resolution as f64;
            }
            row
        })
        .collect()
}

/// Value iteration of the limit model. States are the points of `grid`;
/// actions are `μ ⊗ Q̄` with each row of `Q̄` on a grid of resolution
/// `action_resolution` over `D(x)`; the next distribution is projected to the
/// nearest grid point. Common noise enters as an exact finite expectation.
pub fn value_iterate_limit(
    model: &MeanFieldModel,
    spec: &DiscountSpec,
    grid: &SimplexGrid,
    action_resolution: usize,
) -> Result<LimitValueTable> {
    let d = model.d();
    if grid.d() != d {
        return input("grid dimension differs from the model's state count");
    }
    if action_resolution == 0 {
        return input("action resolution must be positive");
    }
    let options: Vec<Vec<Vec<f64>>> = (0..d).map(|x| row_options(model, x, action_resolution)).collect();
    let choice_count = |i: usize| -> u128 {
        grid.counts(i)
            .iter()
            .enumerate()
            .map(|(x, &k)| if k > 0 { options[x].len() as u128 } else { 1 })
            .product()
    };
    let pairs: u128 = (0..grid.len()).map(choice_count).sum();
    guard("limit-model state-action pairs", pairs, MAX_STATE_ACTION_PAIRS)?;

    let outcomes = model.transition.outcomes();
    let m = model.actions().m();
    let mdp = FiniteMdp::build(grid.len(), |i| {
        let mu = grid.point(i);
        let occupied: Vec<bool> = grid.counts(i).iter().map(|&k| k > 0).collect();
        // Per (x, a): reward and next-state law for every noise outcome.
        let mut rewards = vec![0.0; d * m];
        let mut laws = vec![vec![0.0; d]; d * m * outcomes.len()];
        for x in (0..d).filter(|&x| occupied[x]) {
            for &a in model.actions().of(x) {
                rewards[x * m + a] = model.reward.eval(x, a, &mu);
                for z in 0..outcomes.len() {
                    laws[(x * m + a) * outcomes.len() + z] = model.transition.next_law(x, a, &mu, z);
                }
            }
        }
        let count = choice_count(i) as usize;
        let mut choices = Vec::with_capacity(count);
        for k in 0..count {
            let rows = decode_rows(k, &occupied, &options);
            let mut reward = 0.0;
            let mut next_mu = vec![vec![0.0; d]; outcomes.len()];
            for x in (0..d).filter(|&x| occupied[x]) {
                for (a, &q) in options[x][rows[x]].iter().enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    let w = mu.get(x) * q;
                    reward += w * rewards[x * m + a];
                    for (z, nm) in next_mu.iter_mut().enumerate() {
                        let law = &laws[(x * m + a) * outcomes.len() + z];
                        for (y, p) in law.iter().enumerate() {
                            nm[y] += w * p;
                        }
                    }
                }
            }
            let mut next: Vec<(usize, f64)> = Vec::with_capacity(outcomes.len());
            for (z, nm) in next_mu.iter().enumerate() {
                if outcomes[z].prob > 0.0 {
                    next.push((grid.project(nm), outcomes[z].prob));
                }
            }
            choices.push(Choice { reward, next });
        }
        Ok(choices)
    })?;
    let Solution {
        values,
        policy,
        iterations,
        residual,
    } = mdp.value_iterate(spec)?;
    let policies = policy
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let occupied: Vec<bool> = grid.counts(i).iter().map(|&c| c > 0).collect();
            let rows = decode_rows(k, &occupied, &options);
            let mat = Matrix::from_fn(d, m, |x, a| options[x][rows[x]][a]);
            ConditionalPolicy::new(mat, model.actions())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitValueTable {
        grid: grid.clone(),
        beta: spec.beta,
        values,
        policies,
        iterations,
        residual,
    })
}

/// Mixed-radix decoding of a choice index into one row option per state,
/// last state fastest; unoccupied states always use option 0.
fn decode_rows(mut k: usize, occupied: &[bool], options: &[Vec<Vec<f64>>]) -> Vec<usize> {
    let mut rows = vec![0; occupied.len()];
    for x in (0..occupied.len()).rev() {
        if occupied[x] {
            rows[x] = k % options[x].len();
            k /= options[x].len();
        }
    }
    rows
}

/// Optimal values of one agent in isolation, for models whose reward and
/// transitions ignore the population: `V(x) = max_a { r(x,a) + β E V(x') }`.
pub fn single_agent_values(model: &MeanFieldModel, spec: &DiscountSpec) -> Result<Vec<f64>> {
    if !model.is_population_independent() {
        return input("single-agent reduction needs population-independent reward and transitions");
    }
    let d = model.d();
    let mu = SimplexVector::uniform(d);
    let outcomes = model.transition.outcomes();
    let mdp = FiniteMdp::build(d, |x| {
        Ok(model
            .actions()
            .of(x)
            .iter()
            .map(|&a| {
                let mut next = Vec::new();
                for (z, o) in outcomes.iter().enumerate() {
                    for (y, p) in model.transition.next_law(x, a, &mu, z).into_iter().enumerate() {
                        if p > 0.0 {
                            next.push((y, o.prob * p));
                        }
                    }
                }
                Choice {
                    reward: model.reward.eval(x, a, &mu),
                    next,
                }
            })
            .collect())
    })?;
    Ok(mdp.value_iterate(spec)?.values)
}
