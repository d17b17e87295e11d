use rayon::prelude::*;

use crate::error::{input, Result};
use crate::model::{ConditionalPolicy, DiscountSpec, MeanFieldModel, SimplexVector};

use super::flow::{flow, flow_rewards, Schedule};
use super::grid::SimplexGrid;
use super::limit::value_iterate_limit;

/// Long-run average of a reward sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageReport {
    pub n: usize,
    /// `(1/n) Σ_{k<n} r_k`.
    pub cesaro: f64,
    /// Smallest and largest partial average `(1/j) Σ_{k<j} r_k` over the last
    /// tenth of the horizon, and the plain mean of that window.
    pub tail_min: f64,
    pub tail_max: f64,
    pub tail_mean: f64,
}

pub fn average_reward(rewards: &[f64]) -> Result<AverageReport> {
    let n = rewards.len();
    if n == 0 {
        return input("average over an empty reward sequence");
    }
    let window = n.div_ceil(10);
    let mut sum = 0.0;
    let mut tail_min = f64::INFINITY;
    let mut tail_max = f64::NEG_INFINITY;
    for (j, r) in rewards.iter().enumerate() {
        sum += r;
        if j + 1 > n - window {
            let avg = sum / (j + 1) as f64;
            tail_min = tail_min.min(avg);
            tail_max = tail_max.max(avg);
        }
    }
    let tail_mean = rewards[n - window..].iter().sum::<f64>() / window as f64;
    Ok(AverageReport {
        n,
        cesaro: sum / n as f64,
        tail_min,
        tail_max,
        tail_mean,
    })
}

/// `L = ⌈log(tol (1−β)/C) / log β⌉`: beyond `L` steps the discounted tail is
/// below `tol`.
pub fn truncation_horizon(beta: f64, tol: f64, bound: f64) -> usize {
    if bound <= 0.0 {
        return 0;
    }
    let l = ((tol * (1.0 - beta) / bound).ln() / beta.ln()).ceil();
    l.max(0.0) as usize
}

fn discounted(rewards: &[f64], beta: f64, horizon: usize) -> f64 {
    let mut disc = 1.0;
    let mut s = 0.0;
    for r in &rewards[..=horizon] {
        s += disc * r;
        disc *= beta;
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauberRow {
    pub beta: f64,
    pub horizon: usize,
    /// `(1−β) J^β_ψ(μ₀)` by truncated summation along the flow.
    pub scaled_value: f64,
    /// `ρ(β) = (1−β) J^β_ψ(ν)` with `ν` uniform.
    pub rho: f64,
    /// `|(1−β) J^β_ψ(μ₀) − G|`.
    pub gap: f64,
    /// `(1−β) Σ_{k≤L} β^k |r_k − G| + |G| β^{L+1} + tol`, which bounds the gap
    /// whenever the average has settled at `G`.
    pub abelian_bound: f64,
    /// `G ≤ (1−β) J^β + tol`.
    pub average_below_discounted: bool,
}

/// Finite-horizon evidence for the Abelian/Tauberian link between Cesàro
/// averages and vanishing-discount limits along a deterministic flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TauberReport {
    /// Average reward proxy `G`: Cesàro mean over `average_horizon` steps.
    pub average: AverageReport,
    pub rows: Vec<TauberRow>,
    /// Gaps shrink as `β` increases (rows are sorted by `β`).
    pub gaps_monotone: bool,
    /// Every `|ρ(β)| ≤ C`.
    pub rho_bounded: bool,
    /// Every gap within its Abelian bound.
    pub abelian_ok: bool,
    /// Human-readable descriptions of every failed check.
    pub violations: Vec<String>,
}

impl TauberReport {
    pub fn passed(&self) -> bool {
        self.gaps_monotone && self.rho_bounded && self.abelian_ok
    }
}

/// Evaluates `(1−β)J^β_ψ(μ₀)` for each `β` along the deterministic flow under
/// the stationary policy and compares with the long-run average.
pub fn tauber_check(
    model: &MeanFieldModel,
    policy: &ConditionalPolicy,
    mu0: &SimplexVector,
    betas: &[f64],
    tol: f64,
) -> Result<TauberReport> {
    if model.transition.has_common_noise() {
        return input("discounted sums along the flow need a model without common noise");
    }
    if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return input("discount factors must lie in (0,1)");
    }
    let c = model.reward.bound();
    let mut betas = betas.to_vec();
    betas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let horizons: Vec<usize> = betas.iter().map(|&b| truncation_horizon(b, tol, c)).collect();
    let steps = horizons.iter().copied().max().unwrap_or(0).max(1);
    let schedule = Schedule::Stationary(policy);
    let traj = flow(mu0, schedule, &model.transition, steps, None)?;
    let rewards = flow_rewards(&traj, schedule, &model.reward)?;
    let nu = SimplexVector::uniform(model.d());
    let traj_nu = flow(&nu, schedule, &model.transition, steps, None)?;
    let rewards_nu = flow_rewards(&traj_nu, schedule, &model.reward)?;
    let average = average_reward(&rewards)?;
    let g = average.cesaro;

    let mut rows = Vec::with_capacity(betas.len());
    let mut violations = Vec::new();
    for (&beta, &l) in betas.iter().zip(&horizons) {
        let scaled_value = (1.0 - beta) * discounted(&rewards, beta, l);
        let rho = (1.0 - beta) * discounted(&rewards_nu, beta, l);
        let mut disc = 1.0;
        let mut dev = 0.0;
        for r in &rewards[..=l] {
            dev += disc * (r - g).abs();
            disc *= beta;
        }
        let abelian_bound = (1.0 - beta) * dev + g.abs() * disc + tol;
        let gap = (scaled_value - g).abs();
        let below = g <= scaled_value + tol;
        if !below {
            violations.push(format!(
                "beta {beta}: average {g} exceeds (1-beta)J = {scaled_value} by {}",
                g - scaled_value
            ));
        }
        rows.push(TauberRow {
            beta,
            horizon: l,
            scaled_value,
            rho,
            gap,
            abelian_bound,
            average_below_discounted: below,
        });
    }
    let gaps_monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap + tol);
    if !gaps_monotone {
        violations.push("gaps do not shrink as beta increases".into());
    }
    let rho_bounded = rows.iter().all(|r| r.rho.abs() <= c + tol);
    if !rho_bounded {
        violations.push("some rho(beta) exceeds the reward bound".into());
    }
    let abelian_ok = rows.iter().all(|r| r.gap <= r.abelian_bound);
    if !abelian_ok {
        violations.push("some gap exceeds its Abelian bound".into());
    }
    Ok(TauberReport {
        average,
        rows,
        gaps_monotone,
        rho_bounded,
        abelian_ok,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub beta: f64,
    /// `ρ(β) = (1−β) J^β(ν)`.
    pub rho: f64,
    /// Extremes of `h^β(μ) = J^β(μ) − J^β(ν)` over the grid.
    pub h_min: f64,
    pub h_max: f64,
    /// `h^β` at every grid point.
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    /// Grid index of the reference `ν` (the grid point nearest to uniform).
    pub reference: usize,
    pub rows: Vec<BiasRow>,
}

/// Tabulates the relative value `h^β` on the grid for several `β`.
pub fn bias_diagnostic(
    model: &MeanFieldModel,
    betas: &[f64],
    grid: &SimplexGrid,
    action_resolution: usize,
    tolerance: f64,
    max_iterations: usize,
) -> Result<BiasReport> {
    let reference = grid.project(SimplexVector::uniform(model.d()).as_slice());
    let rows = betas
        .par_iter()
        .map(|&beta| {
            let spec = DiscountSpec::new(beta, tolerance, max_iterations)?;
            let table = value_iterate_limit(model, &spec, grid, action_resolution)?;
            let j_nu = table.values[reference];
            let h: Vec<f64> = table.values.iter().map(|v| v - j_nu).collect();
            Ok(BiasRow {
                beta,
                rho: (1.0 - beta) * j_nu,
                h_min: h.iter().copied().fold(f64::INFINITY, f64::min),
                h_max: h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                h,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BiasReport { reference, rows })
}
