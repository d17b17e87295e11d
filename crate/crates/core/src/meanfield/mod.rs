//! The limit model: deterministic (or common-noise driven) flow of the
//! population distribution, discounted dynamic programming on a discretized
//! simplex, and average-reward diagnostics.

mod average;
mod flow;
mod grid;
mod limit;

pub use average::{
    average_reward, bias_diagnostic, truncation_horizon, tauber_check, AverageReport,
    BiasReport, BiasRow, TauberReport, TauberRow,
};
pub use flow::{flow, flow_rewards, flow_step, policy_reward, Schedule, Trajectory};
pub use grid::SimplexGrid;
pub use limit::{single_agent_values, value_iterate_limit, LimitValueTable};
