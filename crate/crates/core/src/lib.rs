//! Secrecy capacity regions and optimal power allocation for the parallel
//! and ergodic-fading Gaussian cognitive multiple-access channel with a
//! confidential message.
//!
//! Two users share a common message; user 1 also sends a confidential one
//! that user 2 must not learn. [`allocator`] gives the closed-form
//! allocation maximising `R0 + γ1·R1` and searches for the multipliers that
//! meet both power budgets, [`oracle`] certifies it by brute force on small
//! instances, and [`fading`] turns sampled fading states into ergodic
//! boundary points.
//!
//! ```
//! use cmac_secrecy::{rate_pair_parallel, solve_multipliers, ParallelInstance};
//!
//! let inst = ParallelInstance::from_noise(&[1.0, 2.0], &[4.0, 1.0], 3.0, 2.0).unwrap();
//! let sol = solve_multipliers(&inst, 2.0).unwrap();
//! let rates = rate_pair_parallel(&inst, &sol.allocations).unwrap();
//! assert!(rates.r0 > 0.0 && rates.r1 > 0.0);
//! ```

pub mod allocator;
pub mod channel;
pub mod error;
pub mod fading;
pub mod frontier;
pub mod oracle;
pub mod par;

pub use allocator::{
    allocate_fading_state, allocate_fading_state_consistent, allocate_subchannel,
    allocate_subchannel_detailed, max_secrecy_endpoint_empirical, max_secrecy_endpoint_parallel,
    solve_async, solve_multipliers, solve_multipliers_empirical, solve_multipliers_empirical_with,
    solve_multipliers_with, AsyncSolution, Branch, BudgetStatus, ClosedFormIntermediates,
    FadingRule, MultiplierPair, MultiplierSolution, SolverOptions,
};
pub use channel::{
    classify, db_to_linear, linear_to_db, rate_contribution_fading, rate_pair, rate_pair_parallel,
    rate_pair_parallel_async, subchannel_rates, FadingState, ParallelInstance, PowerAllocation,
    RatePair, SetLabel, Subchannel, Transmission, WeightedObjective,
};
pub use error::{Error, Result};
pub use fading::{
    ergodic_boundary_point, rule_discrepancy, sample_states, BoundaryPoint, RayleighSpec,
    RuleDiscrepancy,
};
pub use oracle::{
    grid_optimize, grid_optimize_mode, kkt_residuals_parallel, kkt_residuals_state,
    lagrangian_grid_optimize_state, random_instances, GridSpec, KktKind, KktReport, OracleSolution,
};
pub use par::Execution;
