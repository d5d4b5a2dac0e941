//! Jacobian bundles of discrete-time dynamics.
//!
//! The distribution is over the stacked perturbation `(w, v)` of state and
//! input, so its dimension must be `n + m`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::distribution::SmoothingDistribution;
use super::estimators::{check_dim, mean_and_variance, regress_deviations};
use crate::error::Result;
use crate::systems::Dynamics;

/// Estimated `(Â, B̂)` with per-entry summand variances.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBundle {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub a_variance: DMatrix<f64>,
    pub b_variance: DMatrix<f64>,
    pub sample_count: usize,
}

impl JacobianBundle {
    fn exact<D: Dynamics + ?Sized>(sys: &D, x: &DVector<f64>, u: &DVector<f64>, n: usize) -> Self {
        let (a, b) = sys.jacobians(x, u);
        Self {
            a_variance: DMatrix::zeros(a.nrows(), a.ncols()),
            b_variance: DMatrix::zeros(b.nrows(), b.ncols()),
            a,
            b,
            sample_count: n,
        }
    }

    pub fn a_standard_error(&self) -> DMatrix<f64> {
        let n = self.sample_count as f64;
        self.a_variance.map(|v| (v / n).sqrt())
    }

    pub fn b_standard_error(&self) -> DMatrix<f64> {
        let n = self.sample_count as f64;
        self.b_variance.map(|v| (v / n).sqrt())
    }
}

fn split(z: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
    (z.rows(0, n).into_owned(), z.rows(n, z.len() - n).into_owned())
}

fn split_columns(j: DMatrix<f64>, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = j.ncols() - n;
    (j.columns(0, n).into_owned(), j.columns(n, m).into_owned())
}

/// Mean of the exact Jacobians at `(x̄ + w_i, ū + v_i)`.
pub fn jacobian_bundle_first_order<D: Dynamics + ?Sized>(
    sys: &D,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dist: &SmoothingDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<JacobianBundle> {
    let n = sys.state_dim();
    check_dim("(x, u)", n + sys.input_dim(), dist.dim())?;
    let batch = dist.sample(n_samples, seed)?;
    if dist.is_degenerate() {
        return Ok(JacobianBundle::exact(sys, x, u, n_samples));
    }
    let jacs: Vec<DMatrix<f64>> = batch
        .samples
        .par_iter()
        .map(|z| {
            let (w, v) = split(z, n);
            let (a, b) = sys.jacobians(&(x + w), &(u + v));
            let mut j = DMatrix::zeros(n, a.ncols() + b.ncols());
            j.columns_mut(0, n).copy_from(&a);
            j.columns_mut(n, b.ncols()).copy_from(&b);
            j
        })
        .collect();
    let (mean, var) = mean_and_variance(&jacs);
    let (a, b) = split_columns(mean, n);
    let (a_variance, b_variance) = split_columns(var, n);
    Ok(JacobianBundle {
        a,
        b,
        a_variance,
        b_variance,
        sample_count: n_samples,
    })
}

/// Least-squares fit of the sampled dynamics deviations:
/// `argmin_{A,B} Σ_i ‖f(x̄ + w_i, ū + v_i) − f(x̄, ū) − A w_i − B v_i‖²`.
///
/// Directions with zero variance (for instance the state block when only
/// inputs are perturbed) take the exact Jacobian at the nominal point.
pub fn jacobian_bundle_zero_order<D: Dynamics + ?Sized>(
    sys: &D,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dist: &SmoothingDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<JacobianBundle> {
    let n = sys.state_dim();
    check_dim("(x, u)", n + sys.input_dim(), dist.dim())?;
    let batch = dist.sample(n_samples, seed)?;
    if dist.is_degenerate() {
        return Ok(JacobianBundle::exact(sys, x, u, n_samples));
    }
    let nominal = sys.step(x, u);
    let deviations: Vec<DVector<f64>> = batch
        .samples
        .par_iter()
        .map(|z| {
            let (w, v) = split(z, n);
            sys.step(&(x + w), &(u + v)) - &nominal
        })
        .collect();
    let fit = regress_deviations(&batch.samples, &deviations, dist.range_basis())?;
    let mut jac = fit.slope.clone();
    if dist.rank() < dist.dim() {
        let (a, b) = sys.jacobians(x, u);
        let mut exact = DMatrix::zeros(n, dist.dim());
        exact.columns_mut(0, n).copy_from(&a);
        exact.columns_mut(n, b.ncols()).copy_from(&b);
        jac += exact * fit.null_projector();
    }
    let (a, b) = split_columns(jac, n);
    let (a_variance, b_variance) = split_columns(fit.slope_variance * n_samples as f64, n);
    Ok(JacobianBundle {
        a,
        b,
        a_variance,
        b_variance,
        sample_count: n_samples,
    })
}
