//! Adaptive experiments that end in a deployment decision.
//!
//! The crate covers the pieces needed to design and simulate such
//! experiments:
//!
//! - [`exp_family`]: reward models, KL divergences and sampling.
//! - [`state`]: per-trajectory statistics, Z-statistics and weighted Chernoff
//!   information.
//! - [`stopping`]: stopping thresholds and rules.
//! - [`costs`] and [`solver`]: cost models, the optimal allocation, the
//!   balanced allocation for a fixed best-arm share and the equilibrium of
//!   the allocation game.
//! - [`policies`]: epsilon-greedy, Thompson sampling, top-two Thompson
//!   sampling and direct tracking.
//! - [`simulator`]: single trials and parallel Monte Carlo.
//! - [`pareto`]: the length-regret frontier.

pub mod costs;
pub mod error;
pub mod exp_family;
pub mod normal;
pub mod pareto;
pub mod policies;
pub mod quadrature;
pub mod roots;
pub mod simulator;
pub mod solver;
pub mod state;
pub mod stopping;

pub use costs::{CostFunction, CostModel};
pub use error::{Error, Result};
pub use exp_family::{Instance, RewardFamily};
pub use policies::{AllocationRule, Coin, Policy, RuleKind, Sampler};
pub use simulator::{RunConfig, Summary, TrialRecord};
pub use solver::OptimalAllocation;
pub use state::ExperimentState;
pub use stopping::StoppingRule;
