//! Iterative LQR with randomized-smoothing linearizations and a
//! shrinking-horizon MPC forward pass.

mod mpc;
mod problem;
mod run;

pub use mpc::{build_condensed_qp, mpc_solve, CondensedQp, MpcStep, SLACK_PENALTY};
pub use problem::{trajectory_cost, LinearInequality, MpcProblem};
pub use run::{
    input_only_covariance, irs_lqr_run, knot_seed, linearize_trajectory, rollout, run_comparison, ComparisonRow,
    GradientMode, IrsLqrOptions, IrsLqrResult, RunStatus, TrajectoryIterate,
};
