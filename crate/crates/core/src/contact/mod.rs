//! Contact models: rigid complementarity contact in one and two dimensions
//! (exact and with a convex friction relaxation) and penalty forces.

mod one_d;
mod penalty;
mod planar;

pub use one_d::{step_1d, Contact1D, Contact1DParams, Contact1DState, ContactMode1D, Diagnostics1D};
pub use penalty::{
    penalty_forces, penalty_step_1d, smoothed_penalty_forces, PenaltyParams, PenaltyState1D, PenaltyStepParams,
    SmoothedForces,
};
pub use planar::{
    step_2d_anitescu, step_2d_exact, Contact2D, Contact2DParams, Contact2DState, ContactMode2D, Diagnostics2D,
    FrictionModel, MODE_TOL,
};
