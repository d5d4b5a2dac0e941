use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which a covariance direction counts as degenerate.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
}

/// Zero-mean symmetric sampling density used to smooth objectives and dynamics.
///
/// The covariance may be singular (including identically zero). Sampling maps a
/// standard normal draw `z` through a factor `L` with `L Lᵀ = Σ`, so directions
/// outside the range of `Σ` are never perturbed.
#[derive(Debug, Clone)]
pub struct SmoothingDistribution {
    kind: KernelKind,
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
    range_basis: DMatrix<f64>,
    diagonal: bool,
}

impl SmoothingDistribution {
    pub fn gaussian(covariance: DMatrix<f64>) -> Result<Self> {
        let dim = covariance.nrows();
        if dim == 0 || covariance.ncols() != dim {
            return Err(Error::InvalidConfig(format!(
                "covariance must be a non-empty square matrix, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("covariance has non-finite entries".into()));
        }
        let scale = covariance.amax().max(1.0);
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidConfig(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }

        let diagonal = (0..dim).all(|i| (0..dim).all(|j| i == j || covariance[(i, j)] == 0.0));
        let (factor, range_basis) = if diagonal {
            for i in 0..dim {
                if covariance[(i, i)] < 0.0 {
                    return Err(not_psd(covariance[(i, i)]));
                }
            }
            let factor = DMatrix::from_diagonal(&covariance.diagonal().map(f64::sqrt));
            let active: Vec<usize> = (0..dim).filter(|&i| covariance[(i, i)] > 0.0).collect();
            let mut basis = DMatrix::zeros(dim, active.len());
            for (col, &i) in active.iter().enumerate() {
                basis[(i, col)] = 1.0;
            }
            (factor, basis)
        } else {
            let eig = SymmetricEigen::new(covariance.clone());
            let max_eig = eig.eigenvalues.amax();
            let min_eig = eig.eigenvalues.min();
            if min_eig < -RANK_TOL * max_eig.max(1.0) {
                return Err(not_psd(min_eig));
            }
            let active: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > RANK_TOL * max_eig).collect();
            let mut basis = DMatrix::zeros(dim, active.len());
            for (col, &i) in active.iter().enumerate() {
                basis.set_column(col, &eig.eigenvectors.column(i));
            }
            let factor = match Cholesky::new(covariance.clone()) {
                Some(chol) if active.len() == dim => chol.l(),
                _ => {
                    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
                    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
                }
            };
            (factor, basis)
        };

        Ok(Self {
            kind: KernelKind::Gaussian,
            covariance,
            factor,
            range_basis,
            diagonal,
        })
    }

    /// Isotropic Gaussian `N(0, σ² I)`.
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        Self::gaussian(DMatrix::from_diagonal_element(dim, dim, sigma * sigma))
    }

    /// Independent coordinates with the given standard deviations.
    pub fn from_std_devs(std_devs: &[f64]) -> Result<Self> {
        if std_devs.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidConfig(
                "standard deviations must be finite and non-negative".into(),
            ));
        }
        let var = DVector::from_iterator(std_devs.len(), std_devs.iter().map(|s| s * s));
        Self::gaussian(DMatrix::from_diagonal(&var))
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::gaussian(DMatrix::zeros(dim, dim))
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower factor `L` with `L Lᵀ = Σ`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Orthonormal basis (columns) of the perturbed subspace.
    pub fn range_basis(&self) -> &DMatrix<f64> {
        &self.range_basis
    }

    pub fn rank(&self) -> usize {
        self.range_basis.ncols()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// True when every draw is the zero vector.
    pub fn is_degenerate(&self) -> bool {
        self.rank() == 0
    }

    /// Density of the distribution at `w`. Only defined for full-rank covariances.
    pub fn density(&self, w: &DVector<f64>) -> Result<f64> {
        let chol = Cholesky::new(self.covariance.clone())
            .ok_or_else(|| Error::Unsupported("density of a singular Gaussian".into()))?;
        let y = chol
            .l()
            .solve_lower_triangular(w)
            .ok_or_else(|| Error::Unsupported("density of a singular Gaussian".into()))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let d = self.dim() as f64;
        Ok((-0.5 * y.norm_squared() - 0.5 * log_det - 0.5 * d * (2.0 * std::f64::consts::PI).ln()).exp())
    }

    /// Draw `n` perturbations. Identical `(seed, n, distribution)` triples give
    /// bit-identical batches.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PerturbationBatch> {
        if n == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        let dim = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                &self.factor * z
            })
            .collect();
        Ok(PerturbationBatch { samples, seed })
    }
}

fn not_psd(value: f64) -> Error {
    Error::InvalidConfig(format!(
        "covariance is not positive semidefinite (eigenvalue {value:e})"
    ))
}

/// Samples drawn from a [`SmoothingDistribution`] under a fixed seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationBatch {
    pub samples: Vec<DVector<f64>>,
    pub seed: u64,
}

impl PerturbationBatch {
    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn mean(&self) -> DVector<f64> {
        let dim = self.samples.first().map_or(0, |s| s.len());
        let mut acc = DVector::zeros(dim);
        for s in &self.samples {
            acc += s;
        }
        acc / self.count() as f64
    }
}

/// Draw `n` perturbations from `dist` under `seed`.
pub fn sample_perturbations(dist: &SmoothingDistribution, n: usize, seed: u64) -> Result<PerturbationBatch> {
    dist.sample(n, seed)
}
