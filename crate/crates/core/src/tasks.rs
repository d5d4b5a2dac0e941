//! Benchmark planning tasks: a system, a tracking problem, an initial input
//! guess and default optimizer settings.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact::{Contact1D, Contact1DParams, Contact2D, Contact2DParams, FrictionModel};
use crate::error::{Error, Result};
use crate::irs_lqr::{input_only_covariance, GradientMode, IrsLqrOptions, MpcProblem};
use crate::smoothing::VarianceSchedule;
use crate::systems::{
    DubinsCar, Dynamics, LinearSystem, OffsetInput, Pendulum, PendulumParams, Quadrotor, QuadrotorParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Lti,
    #[serde(rename = "push_1d")]
    Push1d,
    PlanarPush,
    Dubins,
    Pendulum,
    Quadrotor,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        Self::Lti,
        Self::Push1d,
        Self::PlanarPush,
        Self::Dubins,
        Self::Pendulum,
        Self::Quadrotor,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::Lti => "lti",
            Self::Push1d => "push_1d",
            Self::PlanarPush => "planar_push",
            Self::Dubins => "dubins",
            Self::Pendulum => "pendulum",
            Self::Quadrotor => "quadrotor",
        }
    }

    /// Builds the preset. `instance_seed` only matters for tasks with random
    /// data (the LTI system).
    pub fn build(&self, instance_seed: u64) -> Result<Task> {
        match self {
            Self::Lti => lti_task(instance_seed),
            Self::Push1d => push_1d_task(),
            Self::PlanarPush => planar_push_task(FrictionModel::Anitescu),
            Self::Dubins => dubins_task(),
            Self::Pendulum => pendulum_task(),
            Self::Quadrotor => quadrotor_task(),
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task '{s}'")))
    }
}

#[derive(Clone)]
pub struct Task {
    pub kind: TaskKind,
    pub system: Arc<dyn Dynamics>,
    pub problem: MpcProblem,
    pub initial_inputs: Vec<DVector<f64>>,
    /// Defaults for everything except the mode and seed.
    pub options: IrsLqrOptions,
}

fn constant_goal(goal: &DVector<f64>, horizon: usize) -> Vec<DVector<f64>> {
    vec![goal.clone(); horizon + 1]
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

/// Random LTI system with controllable `(A, B)`, regulated to the origin with
/// identity weights. Every mode should reach the LQR optimum at once.
pub fn lti_task(instance_seed: u64) -> Result<Task> {
    let (n, m, horizon) = (4, 2, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
    let (a, b) = loop {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5)) + DMatrix::identity(n, n) * 0.8;
        let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        if controllability_rank(&a, &b) == n {
            break (a, b);
        }
    };
    let system = LinearSystem::new(a, b)?;
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let problem = MpcProblem::time_invariant(
        x0,
        horizon,
        DMatrix::identity(n, n),
        DMatrix::identity(m, m),
        DMatrix::identity(n, n),
        constant_goal(&DVector::zeros(n), horizon),
    )?;
    let mut options = IrsLqrOptions::new(GradientMode::Exact, input_only_covariance(n, &[0.5; 2]));
    options.samples = 100;
    Ok(Task {
        kind: TaskKind::Lti,
        system: Arc::new(system),
        problem,
        initial_inputs: vec![DVector::zeros(m); horizon],
        options,
    })
}

/// Rank of `[B, AB, …, A^{n−1}B]`.
pub fn controllability_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        ctrb.columns_mut(i * m, m).copy_from(&block);
        block = a * block;
    }
    ctrb.rank(1e-9)
}

/// 1D pushing: the robot starts one unit behind the box and the box must
/// reach `x = 2`. The initial guess keeps the robot in place, so no knot is
/// in contact and the exact linearization has no path from input to box.
pub fn push_1d_task() -> Result<Task> {
    let params = Contact1DParams::new(1.0, 0.1, 100.0)?;
    let horizon = 10;
    let system = Contact1D::new(params)?;
    let problem = MpcProblem::time_invariant(
        DVector::from_vec(vec![1.0, 0.0]),
        horizon,
        diag(&[1.0, 0.0]),
        diag(&[0.01]),
        diag(&[10.0, 0.0]),
        constant_goal(&DVector::from_vec(vec![2.0, 0.0]), horizon),
    )?
    .with_input_bounds(&DVector::from_element(1, -0.5), &DVector::from_element(1, 3.0))?;
    let mut options = IrsLqrOptions::new(GradientMode::Exact, input_only_covariance(2, &[1.0]));
    options.schedule = VarianceSchedule::Geometric { ratio: 0.7 };
    Ok(Task {
        kind: TaskKind::Push1d,
        system: Arc::new(system),
        problem,
        initial_inputs: vec![DVector::from_element(1, 0.0); horizon],
        options,
    })
}

/// Planar dragging: the sphere starts above the box, out of contact, and
/// must drag the box one unit along `x` through friction.
pub fn planar_push_task(model: FrictionModel) -> Result<Task> {
    let params = Contact2DParams {
        mass: 1.0,
        dt: 0.1,
        stiffness: 100.0,
        friction: 0.5,
        box_half_height: 0.5,
        sphere_radius: 0.1,
    };
    let horizon = 10;
    let system = Contact2D::new(params, model)?;
    let y0 = params.touching_height() + 0.2;
    let problem = MpcProblem::time_invariant(
        DVector::from_vec(vec![0.0, 0.0, y0]),
        horizon,
        diag(&[1.0, 0.0, 0.0]),
        diag(&[0.01, 0.01]),
        diag(&[10.0, 0.0, 0.0]),
        constant_goal(&DVector::from_vec(vec![1.0, 0.0, 0.0]), horizon),
    )?
    .with_input_bounds(
        &DVector::from_vec(vec![-1.0, params.touching_height() - 0.5]),
        &DVector::from_vec(vec![3.0, params.touching_height() + 1.0]),
    )?;
    let mut options = IrsLqrOptions::new(GradientMode::Exact, input_only_covariance(3, &[0.3, 0.3]));
    options.schedule = VarianceSchedule::Geometric { ratio: 0.8 };
    Ok(Task {
        kind: TaskKind::PlanarPush,
        system: Arc::new(system),
        problem,
        initial_inputs: vec![DVector::from_vec(vec![0.0, y0]); horizon],
        options,
    })
}

/// Unicycle parking from a zero-input initial guess.
pub fn dubins_task() -> Result<Task> {
    let horizon = 30;
    let system = DubinsCar::new(0.1);
    let goal = DVector::from_vec(vec![0.0, 2.0, 0.0]);
    let problem = MpcProblem::time_invariant(
        DVector::zeros(3),
        horizon,
        diag(&[0.1, 0.1, 0.1]),
        diag(&[0.01, 0.01]),
        diag(&[10.0, 10.0, 10.0]),
        constant_goal(&goal, horizon),
    )?;
    let mut options = IrsLqrOptions::new(GradientMode::Exact, diag(&[0.0, 0.0, 0.3, 1.0, 1.0]));
    options.schedule = VarianceSchedule::Geometric { ratio: 0.8 };
    options.max_iterations = 30;
    Ok(Task {
        kind: TaskKind::Dubins,
        system: Arc::new(system),
        problem,
        initial_inputs: vec![DVector::zeros(2); horizon],
        options,
    })
}

/// Swing-up from hanging at rest to upright.
pub fn pendulum_task() -> Result<Task> {
    let horizon = 60;
    let params = PendulumParams::default();
    let system = Pendulum::new(params);
    let problem = MpcProblem::time_invariant(
        DVector::zeros(2),
        horizon,
        diag(&[0.1, 0.01]),
        diag(&[0.01]),
        diag(&[100.0, 10.0]),
        constant_goal(&DVector::from_vec(vec![std::f64::consts::PI, 0.0]), horizon),
    )?;
    // The pendulum is affine in its input, so perturbing the input alone would
    // reproduce the exact linearization; the angle is perturbed too.
    let mut options = IrsLqrOptions::new(GradientMode::Exact, diag(&[0.1, 0.1, 1.0]));
    options.schedule = VarianceSchedule::Geometric { ratio: 0.8 };
    options.max_iterations = 30;
    Ok(Task {
        kind: TaskKind::Pendulum,
        system: Arc::new(system),
        problem,
        initial_inputs: vec![DVector::zeros(1); horizon],
        options,
    })
}

/// Fly from hover at the origin to hover at `(1, 1, 1)`. Inputs are rotor
/// thrusts relative to hover.
pub fn quadrotor_task() -> Result<Task> {
    let horizon = 40;
    let quad = Quadrotor::new(QuadrotorParams {
        dt: 0.05,
        ..QuadrotorParams::default()
    });
    let hover = quad.hover_thrust();
    let system = OffsetInput {
        inner: quad,
        offset: DVector::from_element(4, hover),
    };
    let mut goal = DVector::zeros(12);
    goal[0] = 1.0;
    goal[1] = 1.0;
    goal[2] = 1.0;
    let mut running = vec![0.1; 12];
    running[0..3].copy_from_slice(&[1.0, 1.0, 1.0]);
    let mut terminal = vec![10.0; 12];
    terminal[0..3].copy_from_slice(&[100.0, 100.0, 100.0]);
    let problem = MpcProblem::time_invariant(
        DVector::zeros(12),
        horizon,
        diag(&running),
        diag(&[1.0; 4]),
        diag(&terminal),
        constant_goal(&goal, horizon),
    )?;
    let mut options = IrsLqrOptions::new(GradientMode::Exact, input_only_covariance(12, &[0.2; 4]));
    options.schedule = VarianceSchedule::Geometric { ratio: 0.8 };
    options.max_iterations = 20;
    Ok(Task {
        kind: TaskKind::Quadrotor,
        system: Arc::new(system),
        problem,
        initial_inputs: vec![DVector::zeros(4); horizon],
        options,
    })
}
