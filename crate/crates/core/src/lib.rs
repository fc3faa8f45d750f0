//! Multi-agent multi-armed bandits with a Nash-social-welfare objective.
//!
//! Each round an algorithm picks a *policy* (a distribution over `K` arms),
//! one arm is drawn from it, and each of `N` agents observes a reward in
//! `[0, 1]`. Regret is measured against the policy maximizing the product of
//! the agents' expected rewards.
//!
//! - [`nsw`]: policies, reward matrices, welfare evaluation, simplex covers.
//! - [`simplex`]: welfare and UCB-objective maximization, grid oracle.
//! - [`env`]: reward distributions, instances, seeded streams, instance files.
//! - [`algorithms`]: Explore-First, Epsilon-Greedy and UCB agents.
//! - [`harness`]: episodes, regret curves, slope fits, clean-event checks.
//! - [`validate`]: property suites run by `nswbandit validate`.

pub mod algorithms;
pub mod env;
pub mod error;
pub mod harness;
pub mod nsw;
pub mod simplex;
pub mod validate;

pub use algorithms::{AgentKind, BanditAgent, EstimatorState, ScheduleMode};
pub use env::{parse_instance, BanditInstance, RewardDistribution, RngStream};
pub use error::{Error, Result};
pub use harness::{fit_regret_slope, Harness, RegretCurve, RunTrace};
pub use nsw::{nsw_eval, Policy, RewardMatrix};
pub use simplex::{maximize_nsw, maximize_ucb_objective, OptResult, OptimizerConfig};
