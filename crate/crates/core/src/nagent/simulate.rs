use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{input, Result};
use crate::model::{
    AgentConfiguration, ConditionalPolicy, EmpiricalMeasure, MeanFieldModel, SimplexVector,
};

use super::product::ProductValueTable;

/// How agents choose actions.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    /// Each agent samples `a ~ Q̄(·|x_i)` on its own.
    Decentralized(&'a ConditionalPolicy),
    /// The `n_x` agents in state `x` receive actions in the fixed proportions
    /// `Q̄(·|x)`, rounded by largest remainder and handed out in agent order.
    Discretized(&'a ConditionalPolicy),
    /// The joint action stored in an exact `S^N` solution.
    Centralized(&'a ProductValueTable),
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    Configuration(AgentConfiguration),
    /// `N` agents placed by largest-remainder rounding of `N μ`, in state order.
    Measure { n: usize, mu: SimplexVector },
}

impl InitialCondition {
    pub fn states(&self) -> Result<Vec<usize>> {
        match self {
            InitialCondition::Configuration(c) => Ok(c.states().to_vec()),
            InitialCondition::Measure { n, mu } => {
                if *n == 0 {
                    return input("need at least one agent");
                }
                let counts = largest_remainder(*n, mu.as_slice());
                Ok(counts
                    .iter()
                    .enumerate()
                    .flat_map(|(x, &c)| std::iter::repeat(x).take(c))
                    .collect())
            }
        }
    }
}

/// Integer counts summing to `n` closest to `n · weights`; remaining units go
/// to the largest fractional parts, lower index first on ties.
pub fn largest_remainder(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let scaled: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = scaled[i] - scaled[i].floor();
        let fj = scaled[j] - scaled[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// One simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    /// Empirical measure at steps `0..=horizon`.
    pub measures: Vec<EmpiricalMeasure>,
    /// Mean reward at steps `0..=horizon`.
    pub mean_rewards: Vec<f64>,
    /// Common-noise value driving the move out of each step (`None` at the
    /// final step or without common noise).
    pub common_noise: Vec<Option<f64>>,
    pub seed: u64,
}

impl SimulationRecord {
    pub fn horizon(&self) -> usize {
        self.measures.len() - 1
    }

    /// CSV with columns `step, state_0.., mean_reward, z0_value`.
    pub fn to_csv(&self) -> String {
        let d = self.measures[0].d();
        let mut out = String::from("step");
        for x in 0..d {
            out.push_str(&format!(",state_{x}"));
        }
        out.push_str(",mean_reward,z0_value\n");
        for (k, m) in self.measures.iter().enumerate() {
            out.push_str(&k.to_string());
            for w in m.to_simplex().as_slice() {
                out.push_str(&format!(",{w}"));
            }
            out.push_str(&format!(",{}", self.mean_rewards[k]));
            match self.common_noise[k] {
                Some(z) => out.push_str(&format!(",{z}\n")),
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Runs `N` agents for `horizon` steps.
///
/// Random streams: agent `i` draws from ChaCha8 stream `i + 1` and the common
/// noise from stream 0, all keyed by `seed`; adding agents never changes the
/// draws of existing ones.
pub fn simulate_agents(
    model: &MeanFieldModel,
    controller: Controller<'_>,
    init: &InitialCondition,
    horizon: usize,
    seed: u64,
) -> Result<SimulationRecord> {
    let d = model.d();
    let m = model.actions().m();
    let mut states = init.states()?;
    let n = states.len();
    if states.iter().any(|&x| x >= d) {
        return input("initial configuration uses a state outside the model");
    }
    match controller {
        Controller::Decentralized(p) | Controller::Discretized(p) => {
            if p.d() != d || p.m() != m {
                return input("policy shape does not match the model");
            }
        }
        Controller::Centralized(t) => {
            if t.n != n || t.d != d {
                return input("centralized table was solved for a different population");
            }
        }
    }

    let stream_rng = |stream: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(stream);
        r
    };
    let mut noise_rng = stream_rng(0);
    let mut agent_rngs: Vec<ChaCha8Rng> = (0..n as u64).map(|i| stream_rng(i + 1)).collect();

    let action_cdf: Vec<Vec<f64>> = match controller {
        Controller::Decentralized(p) => (0..d).map(|x| cumulative(p.row(x))).collect(),
        _ => Vec::new(),
    };
    let outcomes = model.transition.outcomes();
    let noise_cdf = cumulative(&outcomes.iter().map(|o| o.prob).collect::<Vec<_>>());

    let mut actions = vec![0usize; n];
    let mut record = SimulationRecord {
        measures: Vec::with_capacity(horizon + 1),
        mean_rewards: Vec::with_capacity(horizon + 1),
        common_noise: Vec::with_capacity(horizon + 1),
        seed,
    };
    let mut law_cdf = vec![0.0; d * m * d];
    let mut law = vec![0.0; d];
    for k in 0..=horizon {
        let mut counts = vec![0usize; d];
        for &x in &states {
            counts[x] += 1;
        }
        let emp = EmpiricalMeasure::from_counts(counts.clone())?;
        let mu = emp.to_simplex();

        match controller {
            Controller::Decentralized(_) => {
                for (i, &x) in states.iter().enumerate() {
                    actions[i] = sample_index(&action_cdf[x], agent_rngs[i].gen::<f64>());
                }
            }
            Controller::Discretized(p) => {
                let quotas: Vec<Vec<usize>> =
                    (0..d).map(|x| largest_remainder(counts[x], p.row(x))).collect();
                let mut cursor = vec![0usize; d];
                let mut used = vec![vec![0usize; m]; d];
                for (i, &x) in states.iter().enumerate() {
                    while used[x][cursor[x]] >= quotas[x][cursor[x]] {
                        cursor[x] += 1;
                    }
                    actions[i] = cursor[x];
                    used[x][cursor[x]] += 1;
                }
            }
            Controller::Centralized(t) => actions.copy_from_slice(t.action(&states)),
        }

        let mut pair_counts = vec![0usize; d * m];
        for (&x, &a) in states.iter().zip(&actions) {
            pair_counts[x * m + a] += 1;
        }
        let mut reward = 0.0;
        for x in 0..d {
            for a in 0..m {
                let c = pair_counts[x * m + a];
                if c > 0 {
                    reward += c as f64 * model.reward.eval(x, a, &mu);
                }
            }
        }
        record.measures.push(emp);
        record.mean_rewards.push(reward / n as f64);
        if k == horizon {
            record.common_noise.push(None);
            break;
        }

        let z = if model.transition.has_common_noise() {
            let z = sample_index(&noise_cdf, noise_rng.gen::<f64>());
            record.common_noise.push(Some(outcomes[z].value));
            z
        } else {
            record.common_noise.push(None);
            0
        };
        for x in 0..d {
            for a in 0..m {
                if pair_counts[x * m + a] > 0 {
                    model.transition.next_law_into(x, a, &mu, z, &mut law);
                    let c = cumulative(&law);
                    law_cdf[(x * m + a) * d..(x * m + a + 1) * d].copy_from_slice(&c);
                }
            }
        }
        for (i, x) in states.iter_mut().enumerate() {
            let off = (*x * m + actions[i]) * d;
            *x = sample_index(&law_cdf[off..off + d], agent_rngs[i].gen::<f64>());
        }
    }
    Ok(record)
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = w
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Guard against a last cumulative weight of 1 − ε from rounding.
    if let Some(last) = c.iter().rposition(|_| true) {
        let last_positive = w.iter().rposition(|&p| p > 0.0).unwrap_or(last);
        for v in c.iter_mut().skip(last_positive) {
            *v = f64::INFINITY;
        }
    }
    c
}

/// Seeds for independent replications, drawn from a ChaCha8 generator keyed by
/// the master seed.
pub fn replication_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| r.next_u64()).collect()
}

/// Independent replications run in parallel.
pub fn replicate(
    model: &MeanFieldModel,
    controller: Controller<'_>,
    init: &InitialCondition,
    horizon: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<SimulationRecord>> {
    replication_seeds(seed, count)
        .into_par_iter()
        .map(|s| simulate_agents(model, controller, init, horizon, s))
        .collect()
}

/// Monte Carlo estimate of a discounted value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// `C β^{L+1} / (1−β)`, the largest possible contribution of the dropped tail.
    pub truncation_bound: f64,
    pub replications: usize,
}

/// Averages `Σ_{k≤L} β^k r̄_k` over the records.
pub fn discounted_mc_value(
    records: &[SimulationRecord],
    beta: f64,
    truncation: usize,
    bound: f64,
) -> Result<McEstimate> {
    if records.is_empty() {
        return input("no replications supplied");
    }
    if !(beta > 0.0 && beta < 1.0) {
        return input(format!("discount factor {beta} not in (0,1)"));
    }
    let mut sums = Vec::with_capacity(records.len());
    for r in records {
        if r.mean_rewards.len() <= truncation {
            return input(format!(
                "record of horizon {} is shorter than the truncation {truncation}",
                r.horizon()
            ));
        }
        let mut disc = 1.0;
        let mut s = 0.0;
        for &rk in &r.mean_rewards[..=truncation] {
            s += disc * rk;
            disc *= beta;
        }
        sums.push(s);
    }
    let count = sums.len() as f64;
    let mean = sums.iter().sum::<f64>() / count;
    let std_error = if sums.len() > 1 {
        let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        truncation_bound: bound * beta.powi(truncation as i32 + 1) / (1.0 - beta),
        replications: sums.len(),
    })
}
