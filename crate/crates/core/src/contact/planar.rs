//! A 2-DOF sphere dragging a box through frictional contact on the box's top
//! face.
//!
//! The box slides along `x` on a frictionless floor. The sphere follows its
//! commanded position `(x̃, ỹ)` through virtual springs and presses on the box
//! along `−y`; the normal impulse acts along `+y` on the sphere and friction
//! along `x` couples the two bodies. The gap is
//! `φ = y_robot − box_half_height − sphere_radius`, so commands with
//! `ỹ > box_half_height + sphere_radius` never touch the box.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qp::{solve_qp, QpOptions, QpProblem, QpStatus};
use crate::systems::Dynamics;

/// Tolerance used when testing a contact mode's inequalities.
pub const MODE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact2DParams {
    pub mass: f64,
    pub dt: f64,
    pub stiffness: f64,
    pub friction: f64,
    pub box_half_height: f64,
    pub sphere_radius: f64,
}

impl Contact2DParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("dt", self.dt),
            ("stiffness", self.stiffness),
            ("friction", self.friction),
            ("box_half_height", self.box_half_height),
            ("sphere_radius", self.sphere_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn c_ratio(&self) -> f64 {
        self.mass / (self.dt * self.dt * self.stiffness)
    }

    /// Sphere height at which it just touches the box.
    pub fn touching_height(&self) -> f64 {
        self.box_half_height + self.sphere_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact2DState {
    pub x_object: f64,
    pub x_robot: f64,
    pub y_robot: f64,
}

impl Contact2DState {
    pub fn gap(&self, params: &Contact2DParams) -> f64 {
        self.y_robot - params.touching_height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode2D {
    Separation,
    Sticking,
    /// Sphere slides towards `+x` relative to the box.
    SlidingPositive,
    SlidingNegative,
}

impl ContactMode2D {
    pub const ALL: [ContactMode2D; 4] = [
        ContactMode2D::Separation,
        ContactMode2D::Sticking,
        ContactMode2D::SlidingPositive,
        ContactMode2D::SlidingNegative,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::Separation => "separation",
            Self::Sticking => "sticking",
            Self::SlidingPositive => "sliding_positive",
            Self::SlidingNegative => "sliding_negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics2D {
    pub mode: ContactMode2D,
    /// Normal impulse on the sphere, `≥ 0`.
    pub normal_impulse: f64,
    /// Friction impulse on the box along `+x`; the sphere feels the opposite.
    pub tangential_impulse: f64,
    /// Gap after the step.
    pub gap: f64,
    /// Sphere displacement minus box displacement along `x`.
    pub slip: f64,
    /// More than one mode satisfied its inequalities within [`MODE_TOL`].
    pub tie: bool,
}

impl Diagnostics2D {
    /// Largest violation of normal complementarity, the friction cone, and
    /// maximal dissipation during slip.
    pub fn complementarity_residual(&self, friction: f64) -> f64 {
        let normal = (self.normal_impulse * self.gap)
            .abs()
            .max((-self.normal_impulse).max(0.0))
            .max((-self.gap).max(0.0));
        let cone = (self.tangential_impulse.abs() - friction * self.normal_impulse).max(0.0);
        let slip = if self.slip.abs() > MODE_TOL {
            (self.tangential_impulse - friction * self.normal_impulse * self.slip.signum()).abs()
        } else {
            0.0
        };
        normal.max(cone).max(slip)
    }
}

struct Candidate {
    dx_object: f64,
    dx_robot: f64,
    dy_robot: f64,
    normal: f64,
    tangential: f64,
}

fn candidate(mode: ContactMode2D, phi: f64, dxc: f64, dyc: f64, p: &Contact2DParams) -> (Candidate, f64) {
    let hk = p.dt * p.stiffness;
    let hm = p.dt / p.mass;
    if mode == ContactMode2D::Separation {
        let c = Candidate {
            dx_object: 0.0,
            dx_robot: dxc,
            dy_robot: dyc,
            normal: 0.0,
            tangential: 0.0,
        };
        // Requires a non-negative gap after the step.
        return (c, -(phi + dyc));
    }
    let normal = hk * (-phi - dyc);
    let tangential = match mode {
        ContactMode2D::Sticking => dxc / (1.0 / hk + hm),
        ContactMode2D::SlidingPositive => p.friction * normal,
        _ => -p.friction * normal,
    };
    let c = Candidate {
        dx_object: hm * tangential,
        dx_robot: dxc - tangential / hk,
        dy_robot: -phi,
        normal,
        tangential,
    };
    let slip = c.dx_robot - c.dx_object;
    let violation = match mode {
        ContactMode2D::Sticking => (tangential.abs() - p.friction * normal).max(-normal),
        ContactMode2D::SlidingPositive => (-slip).max(-normal),
        _ => slip.max(-normal),
    };
    (c, violation)
}

fn finish(
    state: &Contact2DState,
    c: Candidate,
    mode: ContactMode2D,
    tie: bool,
    p: &Contact2DParams,
) -> (Contact2DState, Diagnostics2D) {
    let next = Contact2DState {
        x_object: state.x_object + c.dx_object,
        x_robot: state.x_robot + c.dx_robot,
        y_robot: state.y_robot + c.dy_robot,
    };
    let diag = Diagnostics2D {
        mode,
        normal_impulse: c.normal,
        tangential_impulse: c.tangential,
        gap: next.gap(p),
        slip: c.dx_robot - c.dx_object,
        tie,
    };
    (next, diag)
}

/// Exact Coulomb contact step by enumeration of the four contact modes.
///
/// The first mode (in [`ContactMode2D::ALL`] order) whose inequalities hold
/// within [`MODE_TOL`] is returned.
pub fn step_2d_exact(
    state: &Contact2DState,
    command: [f64; 2],
    params: &Contact2DParams,
) -> (Contact2DState, Diagnostics2D) {
    let phi = state.gap(params);
    let dxc = command[0] - state.x_robot;
    let dyc = command[1] - state.y_robot;
    let mut chosen: Option<(ContactMode2D, Candidate)> = None;
    let mut consistent = 0;
    let mut least: Option<(ContactMode2D, Candidate, f64)> = None;
    for mode in ContactMode2D::ALL {
        let (c, violation) = candidate(mode, phi, dxc, dyc, params);
        if violation <= MODE_TOL {
            consistent += 1;
            if chosen.is_none() {
                chosen = Some((mode, c));
            }
        } else if least.as_ref().is_none_or(|(_, _, v)| violation < *v) {
            least = Some((mode, c, violation));
        }
    }
    match chosen {
        Some((mode, c)) => finish(state, c, mode, consistent > 1, params),
        None => {
            let (mode, c, _) = least.expect("four candidate modes");
            finish(state, c, mode, true, params)
        }
    }
}

/// Contact step with Anitescu's convex relaxation of the friction cone,
/// solved as a QP over the displacements `(δx_object, δx_robot, δy_robot)`.
pub fn step_2d_anitescu(
    state: &Contact2DState,
    command: [f64; 2],
    params: &Contact2DParams,
) -> Result<(Contact2DState, Diagnostics2D)> {
    let (h, k, m, mu) = (params.dt, params.stiffness, params.mass, params.friction);
    let phi = state.gap(params);
    let dxc = command[0] - state.x_robot;
    let dyc = command[1] - state.y_robot;
    let p = DMatrix::from_diagonal(&DVector::from_vec(vec![m / h, h * k, h * k]));
    let q = DVector::from_vec(vec![0.0, -h * k * dxc, -h * k * dyc]);
    // φ + δy + μ e (δx_robot − δx_object) ≥ 0 for e = ±1
    let g = DMatrix::from_row_slice(2, 3, &[mu, -mu, -1.0, -mu, mu, -1.0]);
    let bound = DVector::from_element(2, phi);
    let problem = QpProblem::new(p, q, g, bound)?;
    let sol = solve_qp(&problem, &QpOptions::default());
    if sol.status != QpStatus::Optimal {
        return Err(Error::QpFailure(format!(
            "relaxed contact step ended with {:?}",
            sol.status
        )));
    }
    let (plus, minus) = (sol.lambda[0], sol.lambda[1]);
    let c = Candidate {
        dx_object: sol.z[0],
        dx_robot: sol.z[1],
        dy_robot: sol.z[2],
        normal: plus + minus,
        tangential: mu * (minus - plus),
    };
    let slip = c.dx_robot - c.dx_object;
    let mode = if c.normal <= MODE_TOL {
        ContactMode2D::Separation
    } else if slip.abs() <= MODE_TOL {
        ContactMode2D::Sticking
    } else if slip > 0.0 {
        ContactMode2D::SlidingPositive
    } else {
        ContactMode2D::SlidingNegative
    };
    Ok(finish(state, c, mode, false, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionModel {
    Exact,
    Anitescu,
}

/// The planar system as `x = (x_object, x_robot, y_robot)`, `u = (x̃, ỹ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact2D {
    pub params: Contact2DParams,
    pub model: FrictionModel,
}

impl Contact2D {
    pub fn new(params: Contact2DParams, model: FrictionModel) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, model })
    }

    pub fn step_with_diagnostics(&self, state: &Contact2DState, command: [f64; 2]) -> (Contact2DState, Diagnostics2D) {
        match self.model {
            FrictionModel::Exact => step_2d_exact(state, command, &self.params),
            FrictionModel::Anitescu => {
                step_2d_anitescu(state, command, &self.params).expect("relaxed contact QP is feasible for any state")
            }
        }
    }
}

impl Dynamics for Contact2D {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let s = Contact2DState {
            x_object: x[0],
            x_robot: x[1],
            y_robot: x[2],
        };
        let (n, _) = self.step_with_diagnostics(&s, [u[0], u[1]]);
        DVector::from_vec(vec![n.x_object, n.x_robot, n.y_robot])
    }
}
