//! Randomized smoothing for trajectory optimization through contact.
//!
//! The crate provides Monte-Carlo estimators of smoothed objectives and their
//! derivatives, a dense convex QP solver, exact and relaxed contact models,
//! and a bundled iterative-LQR planner built on those pieces.

pub mod contact;
pub mod error;
pub mod irs_lqr;
pub mod qp;
pub mod smoothing;
pub mod systems;
pub mod tasks;

pub use error::{Error, Result};
