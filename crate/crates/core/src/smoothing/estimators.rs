//! Monte-Carlo estimators of the bundled objective and its gradient.
//!
//! Function evaluations run as a parallel map over the sample index; all
//! reductions are sequential in sample order, so results do not depend on the
//! number of worker threads.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::distribution::SmoothingDistribution;
use super::functions::ScalarFunction;
use crate::error::{Error, Result};

/// A Monte-Carlo estimate together with the per-entry variance of its summands.
///
/// `empirical_variance / sample_count` is the squared standard error of `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleEstimate<V> {
    pub value: V,
    pub sample_count: usize,
    pub empirical_variance: V,
}

impl BundleEstimate<f64> {
    pub fn standard_error(&self) -> f64 {
        (self.empirical_variance / self.sample_count as f64).sqrt()
    }
}

impl BundleEstimate<DVector<f64>> {
    pub fn standard_error(&self) -> DVector<f64> {
        let n = self.sample_count as f64;
        self.empirical_variance.map(|v| (v / n).sqrt())
    }
}

impl BundleEstimate<DMatrix<f64>> {
    pub fn standard_error(&self) -> DMatrix<f64> {
        let n = self.sample_count as f64;
        self.empirical_variance.map(|v| (v / n).sqrt())
    }
}

pub(crate) fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension(format!(
            "{what} has dimension {got}, distribution has dimension {expected}"
        )));
    }
    Ok(())
}

/// Sample mean and unbiased per-entry variance, reduced in index order.
pub(crate) fn mean_and_variance(values: &[DMatrix<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = values.len();
    let (r, c) = values[0].shape();
    let mut mean = DMatrix::zeros(r, c);
    for v in values {
        mean += v;
    }
    mean /= n as f64;
    let mut var = DMatrix::zeros(r, c);
    if n > 1 {
        for v in values {
            let d = v - &mean;
            var += d.component_mul(&d);
        }
        var /= (n - 1) as f64;
    }
    (mean, var)
}

/// `(1/N) Σ f(x + w_i)`.
pub fn bundled_objective_estimate<F: ScalarFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dist: &SmoothingDistribution,
    n: usize,
    seed: u64,
) -> Result<BundleEstimate<f64>> {
    check_dim("x", x.len(), dist.dim())?;
    let batch = dist.sample(n, seed)?;
    if dist.is_degenerate() {
        return Ok(BundleEstimate {
            value: f.value(x),
            sample_count: n,
            empirical_variance: 0.0,
        });
    }
    let values: Vec<f64> = batch.samples.par_iter().map(|w| f.value(&(x + w))).collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(BundleEstimate {
        value: mean,
        sample_count: n,
        empirical_variance: var,
    })
}

/// First-order gradient bundle: the sample mean of `∇f(x + w_i)`.
///
/// For functions with jumps this estimator is blind to the Dirac mass of the
/// derivative at the discontinuity and does not converge to `∇f̄`.
pub fn first_order_gradient_bundle<F: ScalarFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dist: &SmoothingDistribution,
    n: usize,
    seed: u64,
) -> Result<BundleEstimate<DVector<f64>>> {
    check_dim("x", x.len(), dist.dim())?;
    let batch = dist.sample(n, seed)?;
    if dist.is_degenerate() {
        return Ok(BundleEstimate {
            value: f.gradient(x),
            sample_count: n,
            empirical_variance: DVector::zeros(x.len()),
        });
    }
    let grads: Vec<DMatrix<f64>> = batch
        .samples
        .par_iter()
        .map(|w| {
            let g = f.gradient(&(x + w));
            DMatrix::from_column_slice(g.len(), 1, g.as_slice())
        })
        .collect();
    let (mean, var) = mean_and_variance(&grads);
    Ok(BundleEstimate {
        value: mean.column(0).into_owned(),
        sample_count: n,
        empirical_variance: var.column(0).into_owned(),
    })
}

/// Zero-order gradient bundle in least-squares form:
/// `argmin_g Σ_i (f(x + w_i) − f(x) − gᵀ w_i)²`.
///
/// Only directions with non-zero variance are regressed. Components outside
/// the perturbed subspace take the exact gradient at `x` (the zero-variance
/// limit of the estimator).
pub fn zero_order_gradient_bundle<F: ScalarFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dist: &SmoothingDistribution,
    n: usize,
    seed: u64,
) -> Result<BundleEstimate<DVector<f64>>> {
    check_dim("x", x.len(), dist.dim())?;
    let batch = dist.sample(n, seed)?;
    if dist.is_degenerate() {
        return Ok(BundleEstimate {
            value: f.gradient(x),
            sample_count: n,
            empirical_variance: DVector::zeros(x.len()),
        });
    }
    let f0 = f.value(x);
    let deviations: Vec<DVector<f64>> = batch
        .samples
        .par_iter()
        .map(|w| DVector::from_element(1, f.value(&(x + w)) - f0))
        .collect();
    let fit = regress_deviations(&batch.samples, &deviations, dist.range_basis())?;
    let mut value = fit.slope.row(0).transpose();
    if dist.rank() < dist.dim() {
        value += fit.null_projector() * f.gradient(x);
    }
    Ok(BundleEstimate {
        value,
        sample_count: n,
        empirical_variance: fit.slope_variance.row(0).transpose() * n as f64,
    })
}

/// Least-squares fit `y_i ≈ J z_i` restricted to the span of `basis`.
pub(crate) struct DeviationFit {
    /// `p × d` slope, zero on the orthogonal complement of the basis.
    pub slope: DMatrix<f64>,
    /// Heteroscedasticity-robust squared standard error of each slope entry.
    pub slope_variance: DMatrix<f64>,
    basis: DMatrix<f64>,
}

impl DeviationFit {
    /// Projector onto the unperturbed directions.
    pub fn null_projector(&self) -> DMatrix<f64> {
        let d = self.basis.nrows();
        DMatrix::identity(d, d) - &self.basis * self.basis.transpose()
    }
}

pub(crate) fn regress_deviations(
    perturbations: &[DVector<f64>],
    deviations: &[DVector<f64>],
    basis: &DMatrix<f64>,
) -> Result<DeviationFit> {
    let n = perturbations.len();
    let rank_needed = basis.ncols();
    let p = deviations[0].len();
    let basis_t = basis.transpose();
    let reduced: Vec<DVector<f64>> = perturbations.iter().map(|z| &basis_t * z).collect();

    let mut gram = DMatrix::zeros(rank_needed, rank_needed);
    let mut cross = DMatrix::zeros(rank_needed, p);
    for (s, y) in reduced.iter().zip(deviations) {
        gram += s * s.transpose();
        cross += s * y.transpose();
    }

    let eig = SymmetricEigen::new(gram.clone());
    let max_eig = eig.eigenvalues.max();
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| max_eig > 0.0 && l > 1e-10 * max_eig)
        .count();
    let singular = || Error::SingularRegression {
        samples: n,
        rank,
        required: rank_needed,
    };
    if n < rank_needed || rank < rank_needed {
        return Err(singular());
    }
    let chol = Cholesky::new(gram).ok_or_else(singular)?;
    let coeffs_t = chol.solve(&cross); // r × p
    let gram_inv = chol.inverse();

    let mut slope_variance = DMatrix::zeros(p, basis.nrows());
    for j in 0..p {
        let mut meat = DMatrix::zeros(rank_needed, rank_needed);
        for (s, y) in reduced.iter().zip(deviations) {
            let resid = y[j] - coeffs_t.column(j).dot(s);
            meat += (s * s.transpose()) * (resid * resid);
        }
        let cov = &gram_inv * meat * &gram_inv;
        let full = basis * cov * &basis_t;
        for l in 0..basis.nrows() {
            slope_variance[(j, l)] = full[(l, l)].max(0.0);
        }
    }

    Ok(DeviationFit {
        slope: coeffs_t.transpose() * &basis_t,
        slope_variance,
        basis: basis.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothing::functions::{TestFunction, UserFunction};

    fn v(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn constant_function_is_exact() {
        let dist = SmoothingDistribution::isotropic(1, 0.7).unwrap();
        let est = bundled_objective_estimate(&TestFunction::Constant(3.0), &v(0.2), &dist, 257, 1).unwrap();
        assert_eq!(est.value, 3.0);
        assert_eq!(est.empirical_variance, 0.0);
    }

    #[test]
    fn square_bundle_matches_second_moment() {
        let sigma = 0.5;
        let dist = SmoothingDistribution::isotropic(1, sigma).unwrap();
        let est = bundled_objective_estimate(&TestFunction::Square, &v(0.0), &dist, 20_000, 4).unwrap();
        assert!((est.value - sigma * sigma).abs() < 4.0 * est.standard_error());
    }

    #[test]
    fn linear_function_gradients_are_exact() {
        let a = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let a2 = a.clone();
        let f = UserFunction::new(move |x| a2.dot(x)).with_gradient({
            let a = a.clone();
            move |_| a.clone()
        });
        let dist = SmoothingDistribution::from_std_devs(&[0.3, 1.0, 2.0]).unwrap();
        let x = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let first = first_order_gradient_bundle(&f, &x, &dist, 50, 3).unwrap();
        assert_eq!(first.value, a);
        let zero = zero_order_gradient_bundle(&f, &x, &dist, 50, 3).unwrap();
        assert!((zero.value - &a).amax() < 1e-12);
    }

    #[test]
    fn heaviside_first_order_is_exactly_zero() {
        let dist = SmoothingDistribution::isotropic(1, 0.3).unwrap();
        for seed in 0..10 {
            let g = first_order_gradient_bundle(&TestFunction::Heaviside, &v(0.0), &dist, 100, seed).unwrap();
            assert_eq!(g.value[0], 0.0);
        }
    }

    #[test]
    fn vee_first_order_is_quantized() {
        let n = 11;
        let dist = SmoothingDistribution::isotropic(1, 1.0).unwrap();
        let g = first_order_gradient_bundle(&TestFunction::Vee, &v(0.0), &dist, n, 8).unwrap();
        let scaled = g.value[0] * n as f64;
        let k = (scaled + n as f64) / 2.0;
        assert!((k - k.round()).abs() < 1e-12);
    }

    #[test]
    fn zero_order_needs_enough_samples() {
        let dist = SmoothingDistribution::isotropic(3, 1.0).unwrap();
        let err = zero_order_gradient_bundle(&TestFunction::Square, &DVector::zeros(3), &dist, 2, 1).unwrap_err();
        assert!(matches!(err, Error::SingularRegression { required: 3, .. }));
    }

    #[test]
    fn zero_order_square_converges_to_two() {
        let dist = SmoothingDistribution::isotropic(1, 0.5).unwrap();
        let g = zero_order_gradient_bundle(&TestFunction::Square, &v(1.0), &dist, 40_000, 2).unwrap();
        assert!((g.value[0] - 2.0).abs() < 4.0 * g.standard_error()[0]);
        assert!((g.value[0] - 2.0).abs() < 0.02);
    }

    #[test]
    fn partially_degenerate_zero_order_uses_exact_gradient_off_span() {
        let f = TestFunction::WigglyQuadratic;
        let dist = SmoothingDistribution::from_std_devs(&[0.0, 0.1]).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let g = zero_order_gradient_bundle(&f, &x, &dist, 200, 5).unwrap();
        assert_eq!(g.value[0], f.gradient(&x)[0]);
        assert_eq!(g.empirical_variance[0], 0.0);
    }

    #[test]
    fn degenerate_distribution_reproduces_exact_gradient() {
        let f = TestFunction::WigglyQuadratic;
        let dist = SmoothingDistribution::zero(1).unwrap();
        let x = v(0.42);
        let exact = f.gradient(&x);
        assert_eq!(first_order_gradient_bundle(&f, &x, &dist, 10, 1).unwrap().value, exact);
        assert_eq!(zero_order_gradient_bundle(&f, &x, &dist, 10, 1).unwrap().value, exact);
        assert_eq!(
            bundled_objective_estimate(&f, &x, &dist, 10, 1).unwrap().value,
            f.value(&x)
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let dist = SmoothingDistribution::isotropic(2, 1.0).unwrap();
        assert!(matches!(
            bundled_objective_estimate(&TestFunction::Square, &v(0.0), &dist, 10, 1),
            Err(Error::Dimension(_))
        ));
    }
}
