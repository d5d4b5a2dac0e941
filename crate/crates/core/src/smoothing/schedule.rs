use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration-indexed shrinkage `Σ_k = η(Σ₀, k)` of the smoothing covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceSchedule {
    Constant,
    /// `Σ_k = γ^k Σ₀` with `0 < γ < 1`; square-summable.
    Geometric {
        ratio: f64,
    },
}

impl VarianceSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant => Ok(()),
            Self::Geometric { ratio } if ratio > 0.0 && ratio < 1.0 => Ok(()),
            Self::Geometric { ratio } => Err(Error::InvalidConfig(format!(
                "geometric schedule ratio must lie in (0, 1), got {ratio}"
            ))),
        }
    }

    /// Scalar multiplier applied to `Σ₀` at iteration `k`.
    pub fn factor(&self, k: usize) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Self::Constant => 1.0,
            Self::Geometric { ratio } => ratio.powi(k as i32),
        })
    }

    pub fn covariance(&self, sigma0: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
        Ok(sigma0 * self.factor(k)?)
    }
}

/// Free-function form of [`VarianceSchedule::covariance`].
pub fn variance_schedule(sigma0: &DMatrix<f64>, k: usize, policy: &VarianceSchedule) -> Result<DMatrix<f64>> {
    policy.covariance(sigma0, k)
}
