//! Randomized smoothing: bundled objectives, gradient and Jacobian bundles,
//! variance schedules, and a quadrature reference for Gaussian convolutions.

mod distribution;
mod estimators;
mod functions;
mod jacobian;
mod oracle;
mod schedule;

pub use distribution::{sample_perturbations, KernelKind, PerturbationBatch, SmoothingDistribution};
pub use estimators::{
    bundled_objective_estimate, first_order_gradient_bundle, zero_order_gradient_bundle, BundleEstimate,
};
pub use functions::{central_difference_gradient, ScalarFunction, TestFunction, UserFunction, FD_STEP};
pub use jacobian::{jacobian_bundle_first_order, jacobian_bundle_zero_order, JacobianBundle};
pub use oracle::{convolution_oracle, convolution_oracle_with, OracleGradient, OracleOptions, OracleValue};
pub use schedule::{variance_schedule, VarianceSchedule};
