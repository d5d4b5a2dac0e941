//! JSON experiment configurations. Unknown keys are rejected everywhere.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use bundleopt::contact::{Contact2DParams, Contact2DState, FrictionModel};
use bundleopt::irs_lqr::GradientMode;
use bundleopt::smoothing::VarianceSchedule;
use bundleopt::tasks::TaskKind;

use crate::error::{CliError, CliResult};

pub fn load<C: DeserializeOwned>(path: &Path) -> CliResult<C> {
    let text = fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::ConfigFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self, name: &str) -> CliResult<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config(format!(
                "{name}: needs finite bounds and at least one point"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn default_quadrature_points() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleEvalConfig {
    /// Catalog id: wiggly_quadratic, heaviside, vee, square or constant.
    pub function: String,
    /// Value of the `constant` function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: Grid,
    #[serde(default = "default_quadrature_points")]
    pub quadrature_points: usize,
}

impl BundleEvalConfig {
    pub fn validate(&self) -> CliResult<()> {
        positive("sigma", self.sigma)?;
        self.grid.validate("grid")?;
        if self.samples < 2 {
            return Err(CliError::Config("samples must be at least 2".into()));
        }
        if self.quadrature_points == 0 {
            return Err(CliError::Config("quadrature_points must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub task: TaskKind,
    /// Seed of the randomly drawn problem data (LTI task only).
    #[serde(default)]
    pub instance_seed: u64,
    /// Friction model of the planar pushing task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction_model: Option<FrictionModel>,
    pub modes: Vec<GradientMode>,
    /// Runs use seeds `seed, seed + 1, …, seed + runs − 1`.
    pub seed: u64,
    pub runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Diagonal standard deviations of Σ₀ over the stacked `(x, u)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0_std: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<VarianceSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl PlanConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.modes.is_empty() || self.runs == 0 {
            return Err(CliError::Config("plan needs at least one mode and one run".into()));
        }
        if self.friction_model.is_some() && self.task != TaskKind::PlanarPush {
            return Err(CliError::Config(
                "friction_model only applies to the planar_push task".into(),
            ));
        }
        if let Some(std) = &self.sigma0_std {
            for &s in std {
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(CliError::Config(format!(
                        "sigma0_std entries must be non-negative, got {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Bundling {
    /// Deterministic tensor-product quadrature.
    Quadrature { points: usize },
    /// Sample mean for values, least-squares fit for the gradient.
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactProbeConfig {
    pub params: Contact2DParams,
    /// Start configuration; defaults to everything at the origin with the
    /// sphere resting on the box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Contact2DState>,
    /// Commanded sphere x.
    pub command_x: Grid,
    /// Commanded sphere height above the touching height.
    pub command_gap: Grid,
    /// Standard deviation of the command perturbation (both axes).
    pub sigma: f64,
    pub bundling: Bundling,
    pub seed: u64,
}

impl ContactProbeConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.params.validate()?;
        self.command_x.validate("command_x")?;
        self.command_gap.validate("command_gap")?;
        positive("sigma", self.sigma)?;
        match self.bundling {
            Bundling::Quadrature { points: 0 } => Err(CliError::Config("quadrature points must be positive".into())),
            Bundling::MonteCarlo { samples } if samples < 3 => {
                Err(CliError::Config("monte_carlo bundling needs at least 3 samples".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn start_state(&self) -> Contact2DState {
        self.state.unwrap_or(Contact2DState {
            x_object: 0.0,
            x_robot: 0.0,
            y_robot: self.params.touching_height(),
        })
    }
}
