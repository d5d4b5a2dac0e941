use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
    pub dt: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.1,
            dt: 0.05,
        }
    }
}

/// Torque-driven pendulum with state `(θ, θ̇)`, `θ = 0` hanging down.
///
/// `θ̈ = (u − b θ̇ − m g l sin θ) / (m l²)`, integrated with semi-implicit
/// Euler: velocity first, then position with the updated velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Pendulum {
    pub params: PendulumParams,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Self {
        Self { params }
    }

    fn inertia(&self) -> f64 {
        self.params.mass * self.params.length * self.params.length
    }

    /// Total mechanical energy, zero at the bottom equilibrium.
    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let p = &self.params;
        0.5 * self.inertia() * x[1] * x[1] + p.mass * p.gravity * p.length * (1.0 - x[0].cos())
    }
}

impl Dynamics for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let accel = (u[0] - p.damping * x[1] - p.mass * p.gravity * p.length * x[0].sin()) / self.inertia();
        let omega = x[1] + p.dt * accel;
        DVector::from_vec(vec![x[0] + p.dt * omega, omega])
    }

    fn jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = &self.params;
        let h = p.dt;
        let inertia = self.inertia();
        let d_theta = -p.mass * p.gravity * p.length * x[0].cos() / inertia;
        let d_omega = -p.damping / inertia;
        let d_u = 1.0 / inertia;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0 + h * h * d_theta,
                h * (1.0 + h * d_omega),
                h * d_theta,
                1.0 + h * d_omega,
            ],
        );
        let b = DMatrix::from_row_slice(2, 1, &[h * h * d_u, h * d_u]);
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn undamped(dt: f64) -> Pendulum {
        Pendulum::new(PendulumParams {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.0,
            dt,
        })
    }

    #[test]
    fn equilibria_are_fixed_points() {
        let p = Pendulum::new(PendulumParams::default());
        let u = DVector::zeros(1);
        let down = DVector::zeros(2);
        assert_eq!(p.step(&down, &u), down);
        let up = DVector::from_vec(vec![PI, 0.0]);
        let next = p.step(&up, &u);
        assert!((next - up).amax() < 1e-15);
    }

    #[test]
    fn one_step_from_horizontal() {
        let p = undamped(0.01);
        let next = p.step(&DVector::from_vec(vec![FRAC_PI_2, 0.0]), &DVector::zeros(1));
        assert!((next[1] + 0.0981).abs() < 1e-12);
        assert!((next[0] - (FRAC_PI_2 - 0.000981)).abs() < 1e-12);
    }

    #[test]
    fn linearization_at_rest_matches_structure() {
        let p = Pendulum::new(PendulumParams::default());
        let x = DVector::zeros(2);
        let u = DVector::zeros(1);
        let (a, b) = p.jacobians(&x, &u);
        let (fa, fb) = super::super::finite_difference_jacobians(&p, &x, &u);
        assert!((&a - fa).amax() < 1e-5);
        assert!((&b - fb).amax() < 1e-5);
        let h = p.params.dt;
        assert!((a[(1, 0)] + 9.81 * h).abs() < 1e-12);
        assert!((a[(1, 1)] - (1.0 - 0.1 * h)).abs() < 1e-12);
    }

    #[test]
    fn semi_implicit_euler_keeps_energy() {
        let p = undamped(1e-4);
        let mut x = DVector::from_vec(vec![1.0, 0.0]);
        let e0 = p.energy(&x);
        let u = DVector::zeros(1);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            x = p.step(&x, &u);
            worst = worst.max((p.energy(&x) - e0).abs() / e0);
        }
        assert!(worst <= 0.01, "energy drift {worst}");
    }
}
