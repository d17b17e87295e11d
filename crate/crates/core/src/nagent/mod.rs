//! The cooperative N-agent problem: exact dynamic programming on `S^N` and on
//! empirical measures, and Monte Carlo simulation of agent populations.

mod empirical;
mod product;
mod simulate;

pub use empirical::{
    check_equivalence, compositions, enumerate_hat_actions, value_iterate_empirical, EmpiricalMdp,
    EmpiricalValueTable,
};
pub use product::{
    bellman_product_step, decode_configuration, encode_configuration, value_iterate_product,
    ProductMdp, ProductValueTable,
};
pub use simulate::{
    discounted_mc_value, largest_remainder, replicate, replication_seeds, simulate_agents,
    Controller, InitialCondition, McEstimate, SimulationRecord,
};

/// Upper limit on value-table entries for exact solvers.
pub const MAX_TABLE_ENTRIES: u128 = 1_000_000;
