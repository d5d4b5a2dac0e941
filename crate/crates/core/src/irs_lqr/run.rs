use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mpc::mpc_solve;
use super::problem::{trajectory_cost, MpcProblem};
use crate::error::{Error, Result};
use crate::smoothing::{
    jacobian_bundle_first_order, jacobian_bundle_zero_order, SmoothingDistribution, VarianceSchedule,
};
use crate::systems::{linearize_exact, Dynamics, LinearizedDynamics};

/// Source of the per-knot linearizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Exact,
    FirstOrderBundle,
    ZeroOrderBundle,
}

impl GradientMode {
    pub const ALL: [GradientMode; 3] = [Self::Exact, Self::FirstOrderBundle, Self::ZeroOrderBundle];

    pub fn id(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::FirstOrderBundle => "first_order_bundle",
            Self::ZeroOrderBundle => "zero_order_bundle",
        }
    }
}

impl std::fmt::Display for GradientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for GradientMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown gradient mode '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsLqrOptions {
    pub mode: GradientMode,
    /// Samples per knot for the bundle modes.
    pub samples: usize,
    /// Initial covariance over the stacked `(x, u)` perturbation.
    pub sigma0: DMatrix<f64>,
    pub schedule: VarianceSchedule,
    pub max_iterations: usize,
    pub seed: u64,
    /// Relative cost change regarded as no progress.
    pub convergence_tol: f64,
    /// Consecutive no-progress iterations that end the run.
    pub convergence_window: usize,
    /// Consecutive cost increases that abort the run.
    pub divergence_window: usize,
}

impl IrsLqrOptions {
    pub fn new(mode: GradientMode, sigma0: DMatrix<f64>) -> Self {
        Self {
            mode,
            samples: 100,
            sigma0,
            schedule: VarianceSchedule::Constant,
            max_iterations: 20,
            seed: 0,
            convergence_tol: 1e-6,
            convergence_window: 3,
            divergence_window: 5,
        }
    }
}

/// Block-diagonal `(x, u)` covariance with zero state block and the given
/// input standard deviations.
pub fn input_only_covariance(state_dim: usize, input_std: &[f64]) -> DMatrix<f64> {
    let m = input_std.len();
    let mut cov = DMatrix::zeros(state_dim + m, state_dim + m);
    for (i, s) in input_std.iter().enumerate() {
        cov[(state_dim + i, state_dim + i)] = s * s;
    }
    cov
}

/// Seed of the sampler at knot `t` of iteration `k`; independent of thread
/// scheduling.
pub fn knot_seed(run_seed: u64, iteration: usize, knot: usize) -> u64 {
    let mut z = run_seed
        ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (knot as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(31);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryIterate {
    /// 0 for the initial rollout.
    pub iteration: usize,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub cost: f64,
    /// Covariance used to linearize the previous iterate (zero for iteration 0).
    pub variance: DMatrix<f64>,
    /// Models used by the forward pass that produced this iterate.
    pub linearizations: Vec<LinearizedDynamics>,
    /// Knots whose MPC problem needed softened state constraints.
    pub relaxed_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsLqrResult {
    pub history: Vec<TrajectoryIterate>,
    pub status: RunStatus,
}

impl IrsLqrResult {
    pub fn costs(&self) -> Vec<f64> {
        self.history.iter().map(|it| it.cost).collect()
    }

    pub fn final_iterate(&self) -> &TrajectoryIterate {
        self.history.last().expect("history starts with the initial rollout")
    }
}

pub fn rollout<D: Dynamics + ?Sized>(sys: &D, x0: &DVector<f64>, inputs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for u in inputs {
        let next = sys.step(states.last().expect("non-empty"), u);
        states.push(next);
    }
    states
}

/// Linearizes every knot `(x̄_t, ū_t)`, `t < T`, in parallel.
#[allow(clippy::too_many_arguments)]
pub fn linearize_trajectory<D: Dynamics + ?Sized>(
    sys: &D,
    states: &[DVector<f64>],
    inputs: &[DVector<f64>],
    mode: GradientMode,
    dist: &SmoothingDistribution,
    samples: usize,
    run_seed: u64,
    iteration: usize,
) -> Result<Vec<LinearizedDynamics>> {
    (0..inputs.len())
        .into_par_iter()
        .map(|t| {
            let (x, u) = (&states[t], &inputs[t]);
            let seed = knot_seed(run_seed, iteration, t);
            let bundle = match mode {
                GradientMode::Exact => return Ok(linearize_exact(sys, x, u)),
                GradientMode::FirstOrderBundle => jacobian_bundle_first_order(sys, x, u, dist, samples, seed)?,
                GradientMode::ZeroOrderBundle => jacobian_bundle_zero_order(sys, x, u, dist, samples, seed)?,
            };
            Ok(LinearizedDynamics::from_jacobians(sys, x, u, bundle.a, bundle.b))
        })
        .collect()
}

fn check_inputs<D: Dynamics + ?Sized>(
    sys: &D,
    problem: &MpcProblem,
    initial_inputs: &[DVector<f64>],
    opts: &IrsLqrOptions,
) -> Result<()> {
    problem.validate()?;
    opts.schedule.validate()?;
    let (n, m) = (sys.state_dim(), sys.input_dim());
    if problem.state_dim() != n || problem.input_dim() != m {
        return Err(Error::Dimension(format!(
            "problem is for ({}, {}) states/inputs, system has ({n}, {m})",
            problem.state_dim(),
            problem.input_dim()
        )));
    }
    if initial_inputs.len() != problem.horizon || initial_inputs.iter().any(|u| u.len() != m) {
        return Err(Error::Dimension(format!(
            "initial guess needs {} inputs of dimension {m}",
            problem.horizon
        )));
    }
    if opts.sigma0.nrows() != n + m || opts.sigma0.ncols() != n + m {
        return Err(Error::Dimension(format!("sigma0 must be {0}x{0}", n + m)));
    }
    match opts.mode {
        GradientMode::Exact => {}
        GradientMode::FirstOrderBundle if opts.samples == 0 => {
            return Err(Error::InvalidConfig("bundle modes need at least one sample".into()));
        }
        GradientMode::ZeroOrderBundle if opts.samples < n + m => {
            return Err(Error::InvalidConfig(format!(
                "zero-order bundles need at least n + m = {} samples, got {}",
                n + m,
                opts.samples
            )));
        }
        _ => {}
    }
    Ok(())
}

/// Iterative LQR with bundled linearizations: linearize every knot with the
/// covariance of the current iteration, then roll the true system forward
/// while re-solving the shrinking-horizon MPC at every step.
pub fn irs_lqr_run<D: Dynamics + ?Sized>(
    sys: &D,
    problem: &MpcProblem,
    initial_inputs: &[DVector<f64>],
    opts: &IrsLqrOptions,
) -> Result<IrsLqrResult> {
    check_inputs(sys, problem, initial_inputs, opts)?;
    let dim = opts.sigma0.nrows();
    let states = rollout(sys, &problem.initial_state, initial_inputs);
    let cost = trajectory_cost(problem, &states, initial_inputs);
    let mut history = vec![TrajectoryIterate {
        iteration: 0,
        states,
        inputs: initial_inputs.to_vec(),
        cost,
        variance: DMatrix::zeros(dim, dim),
        linearizations: Vec::new(),
        relaxed_steps: Vec::new(),
    }];
    let mut stalled = 0;
    let mut rising = 0;
    let mut status = RunStatus::MaxIterations;

    for k in 0..opts.max_iterations {
        let current = history.last().expect("non-empty");
        let variance = opts.schedule.covariance(&opts.sigma0, k)?;
        let dist = SmoothingDistribution::gaussian(variance.clone())?;
        let lins = linearize_trajectory(
            sys,
            &current.states,
            &current.inputs,
            opts.mode,
            &dist,
            opts.samples,
            opts.seed,
            k,
        )?;

        let mut states = vec![problem.initial_state.clone()];
        let mut inputs = Vec::with_capacity(problem.horizon);
        let mut relaxed_steps = Vec::new();
        for t in 0..problem.horizon {
            let step = mpc_solve(problem, &lins, t, &states[t])?;
            if step.relaxed {
                relaxed_steps.push(t);
            }
            let next = sys.step(&states[t], &step.input);
            inputs.push(step.input);
            states.push(next);
        }
        let cost = trajectory_cost(problem, &states, &inputs);
        if !cost.is_finite() {
            return Err(Error::Diverged(format!("cost became {cost} at iteration {}", k + 1)));
        }
        let previous = current.cost;
        log::debug!("{} iteration {}: cost {cost:.6e}", opts.mode, k + 1);
        history.push(TrajectoryIterate {
            iteration: k + 1,
            states,
            inputs,
            cost,
            variance,
            linearizations: lins,
            relaxed_steps,
        });

        let change = (cost - previous).abs() / previous.abs().max(f64::MIN_POSITIVE);
        stalled = if change < opts.convergence_tol { stalled + 1 } else { 0 };
        rising = if cost > previous { rising + 1 } else { 0 };
        if stalled >= opts.convergence_window {
            status = RunStatus::Converged;
            break;
        }
        if rising >= opts.divergence_window {
            log::warn!("{} cost rose for {rising} consecutive iterations; stopping", opts.mode);
            status = RunStatus::Diverged;
            break;
        }
    }
    Ok(IrsLqrResult { history, status })
}

/// One row of a long-format comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mode: GradientMode,
    pub seed: u64,
    pub iteration: usize,
    pub cost: f64,
    pub status: RunStatus,
}

/// Runs every `(mode, seed)` pair, in parallel, and lists the cost of every
/// iteration. Rows are ordered by mode, then seed, then iteration.
pub fn run_comparison<D: Dynamics + ?Sized>(
    sys: &D,
    problem: &MpcProblem,
    initial_inputs: &[DVector<f64>],
    base: &IrsLqrOptions,
    modes: &[GradientMode],
    seeds: &[u64],
) -> Result<Vec<ComparisonRow>> {
    let jobs: Vec<(GradientMode, u64)> = modes.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    let results: Vec<Result<IrsLqrResult>> = jobs
        .par_iter()
        .map(|&(mode, seed)| {
            let opts = IrsLqrOptions {
                mode,
                seed,
                ..base.clone()
            };
            irs_lqr_run(sys, problem, initial_inputs, &opts)
        })
        .collect();
    let mut rows = Vec::new();
    for ((mode, seed), result) in jobs.into_iter().zip(results) {
        let result = result?;
        for it in &result.history {
            rows.push(ComparisonRow {
                mode,
                seed,
                iteration: it.iteration,
                cost: it.cost,
                status: result.status,
            });
        }
    }
    Ok(rows)
}
