//! A position-controlled robot pushing a free box along a line.
//!
//! The robot sits to the left of the box and follows its commanded position
//! through a virtual spring of stiffness `k`; the box starts each step at
//! rest. With implicit time stepping the next state is piecewise linear in
//! the command, with one piece per contact mode.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact1DParams {
    /// Mass of the box.
    pub mass: f64,
    pub dt: f64,
    /// Stiffness of the spring pulling the robot to its command.
    pub stiffness: f64,
}

impl Contact1DParams {
    pub fn new(mass: f64, dt: f64, stiffness: f64) -> Result<Self> {
        let p = Self { mass, dt, stiffness };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("dt", self.dt), ("stiffness", self.stiffness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `m / (h² k)`: how strongly the box resists being pushed in one step.
    pub fn c_ratio(&self) -> f64 {
        self.mass / (self.dt * self.dt * self.stiffness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact1DState {
    /// Box position.
    pub x_object: f64,
    /// Robot position.
    pub x_robot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode1D {
    Separation,
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics1D {
    pub mode: ContactMode1D,
    /// Normal impulse on the box, `λ_n ≥ 0`.
    pub impulse: f64,
    /// `x_object⁺ − x_robot⁺ ≥ 0`.
    pub gap: f64,
    /// Robot equilibrium `hk(x̃ − x_robot⁺) − λ_n`.
    pub force_balance_residual: f64,
    /// Box momentum change `m(x_object⁺ − x_object)/h − λ_n`.
    pub momentum_residual: f64,
}

impl Diagnostics1D {
    pub fn complementarity_residual(&self) -> f64 {
        (self.impulse * self.gap)
            .abs()
            .max((-self.impulse).max(0.0))
            .max((-self.gap).max(0.0))
    }
}

/// One implicit step. Contact happens only when the command reaches the box.
pub fn step_1d(state: &Contact1DState, command: f64, params: &Contact1DParams) -> (Contact1DState, Diagnostics1D) {
    let c = params.c_ratio();
    let h = params.dt;
    let (next, mode, impulse) = if command < state.x_object {
        (
            Contact1DState {
                x_object: state.x_object,
                x_robot: command,
            },
            ContactMode1D::Separation,
            0.0,
        )
    } else {
        let joint = (c * state.x_object + command) / (1.0 + c);
        (
            Contact1DState {
                x_object: joint,
                x_robot: joint,
            },
            ContactMode1D::Contact,
            h * params.stiffness * (command - joint),
        )
    };
    let diag = Diagnostics1D {
        mode,
        impulse,
        gap: next.x_object - next.x_robot,
        force_balance_residual: h * params.stiffness * (command - next.x_robot) - impulse,
        momentum_residual: params.mass * (next.x_object - state.x_object) / h - impulse,
    };
    (next, diag)
}

/// The pushing system as `x = (x_object, x_robot)`, `u = (x̃_robot)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact1D {
    pub params: Contact1DParams,
}

impl Contact1D {
    pub fn new(params: Contact1DParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Dynamics for Contact1D {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let s = Contact1DState {
            x_object: x[0],
            x_robot: x[1],
        };
        let (next, _) = step_1d(&s, u[0], &self.params);
        DVector::from_vec(vec![next.x_object, next.x_robot])
    }

    /// Jacobian of the active piece; at the boundary `x̃ = x_object` the
    /// contact piece is used.
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        if u[0] < x[0] {
            (
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            )
        } else {
            let c = self.params.c_ratio();
            let a = c / (1.0 + c);
            let b = 1.0 / (1.0 + c);
            (
                DMatrix::from_row_slice(2, 2, &[a, 0.0, a, 0.0]),
                DMatrix::from_column_slice(2, 1, &[b, b]),
            )
        }
    }
}
