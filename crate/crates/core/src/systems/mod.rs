//! Discrete-time dynamical systems `x_{t+1} = f(x_t, u_t)` and their
//! first-order Taylor linearizations.

mod dubins;
mod linear;
mod pendulum;
mod quadrotor;

pub use dubins::DubinsCar;
pub use linear::LinearSystem;
pub use pendulum::{Pendulum, PendulumParams};
pub use quadrotor::{Quadrotor, QuadrotorParams};

use nalgebra::{DMatrix, DVector};

use crate::smoothing::FD_STEP;

/// A deterministic discrete-time system.
///
/// Implementors without closed-form derivatives inherit central finite
/// differences with absolute step [`FD_STEP`].
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `(∂f/∂x, ∂f/∂u)` at `(x, u)`.
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        finite_difference_jacobians(self, x, u)
    }
}

impl<D: Dynamics + ?Sized> Dynamics for Box<D> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (**self).step(x, u)
    }
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (**self).jacobians(x, u)
    }
}

pub fn finite_difference_jacobians<D: Dynamics + ?Sized>(
    sys: &D,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sys.state_dim();
    let m = sys.input_dim();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + FD_STEP;
        let up = sys.step(&xp, u);
        xp[i] = x[i] - FD_STEP;
        let down = sys.step(&xp, u);
        xp[i] = x[i];
        a.set_column(i, &((up - down) / (2.0 * FD_STEP)));
    }
    let mut up_ = u.clone();
    for j in 0..m {
        up_[j] = u[j] + FD_STEP;
        let up = sys.step(x, &up_);
        up_[j] = u[j] - FD_STEP;
        let down = sys.step(x, &up_);
        up_[j] = u[j];
        b.set_column(j, &((up - down) / (2.0 * FD_STEP)));
    }
    (a, b)
}

/// `inner` driven by `u + offset`, so that a zero input means a nominal
/// operating point (for instance hover thrust) rather than no actuation.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetInput<D> {
    pub inner: D,
    pub offset: DVector<f64>,
}

impl<D: Dynamics> Dynamics for OffsetInput<D> {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.inner.step(x, &(u + &self.offset))
    }
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        self.inner.jacobians(x, &(u + &self.offset))
    }
}

/// Affine model `x_{t+1} ≈ A x_t + B u_t + c` around a nominal point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub x_nominal: DVector<f64>,
    pub u_nominal: DVector<f64>,
}

impl LinearizedDynamics {
    /// Complete `(A, B)` with the affine residual `c = f(x̄, ū) − A x̄ − B ū`.
    pub fn from_jacobians<D: Dynamics + ?Sized>(
        sys: &D,
        x_nominal: &DVector<f64>,
        u_nominal: &DVector<f64>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    ) -> Self {
        let next = sys.step(x_nominal, u_nominal);
        let c = next - &a * x_nominal - &b * u_nominal;
        Self {
            a,
            b,
            c,
            x_nominal: x_nominal.clone(),
            u_nominal: u_nominal.clone(),
        }
    }

    pub fn predict(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.c
    }
}

/// Exact first-order Taylor expansion of `sys` at `(x̄, ū)`.
pub fn linearize_exact<D: Dynamics + ?Sized>(
    sys: &D,
    x_nominal: &DVector<f64>,
    u_nominal: &DVector<f64>,
) -> LinearizedDynamics {
    let (a, b) = sys.jacobians(x_nominal, u_nominal);
    LinearizedDynamics::from_jacobians(sys, x_nominal, u_nominal, a, b)
}
