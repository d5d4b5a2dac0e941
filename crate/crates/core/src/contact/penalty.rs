//! Penalty contact: a stiff spring in the normal direction and a
//! viscous-then-Coulomb friction law, optionally with a Stribeck drop.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::{BundleEstimate, SmoothingDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyParams {
    /// `k_n` in `f_n = −k_n min(φ, 0)`.
    pub normal_stiffness: f64,
    /// Friction coefficient per unit slip speed below `stick_speed`.
    pub viscous_slope: f64,
    /// Slip speed `ψ_s` separating the viscous and the sliding regimes.
    pub stick_speed: f64,
    /// Friction coefficient `μ_d` while sliding.
    pub dynamic_friction: f64,
}

impl PenaltyParams {
    /// Friction law continuous at `stick_speed`.
    pub fn continuous(normal_stiffness: f64, dynamic_friction: f64, stick_speed: f64) -> Result<Self> {
        let p = Self {
            normal_stiffness,
            viscous_slope: dynamic_friction / stick_speed,
            stick_speed,
            dynamic_friction,
        };
        p.validate()?;
        Ok(p)
    }

    /// Friction law whose sliding coefficient falls below the peak static one.
    pub fn stribeck(
        normal_stiffness: f64,
        viscous_slope: f64,
        stick_speed: f64,
        dynamic_friction: f64,
    ) -> Result<Self> {
        let p = Self {
            normal_stiffness,
            viscous_slope,
            stick_speed,
            dynamic_friction,
        };
        p.validate()?;
        if viscous_slope * stick_speed <= dynamic_friction {
            return Err(Error::InvalidConfig(
                "a Stribeck law needs viscous_slope * stick_speed > dynamic_friction".into(),
            ));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("normal_stiffness", self.normal_stiffness),
            ("viscous_slope", self.viscous_slope),
            ("stick_speed", self.stick_speed),
            ("dynamic_friction", self.dynamic_friction),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Size of the friction-coefficient drop at `stick_speed`.
    pub fn stribeck_drop(&self) -> f64 {
        self.viscous_slope * self.stick_speed - self.dynamic_friction
    }
}

/// Normal and tangential penalty forces for signed distance `φ` and slip
/// speed `ψ`. The friction coefficient is `viscous_slope·|ψ|` up to
/// `stick_speed` and `dynamic_friction` beyond; friction opposes `ψ`.
pub fn penalty_forces(phi: f64, psi: f64, params: &PenaltyParams) -> (f64, f64) {
    let normal = -params.normal_stiffness * phi.min(0.0);
    let speed = psi.abs();
    let coefficient = if speed <= params.stick_speed {
        params.viscous_slope * speed
    } else {
        params.dynamic_friction
    };
    let tangential = if psi == 0.0 {
        0.0
    } else {
        -psi.signum() * coefficient * normal
    };
    (normal, tangential)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedForces {
    pub normal: BundleEstimate<f64>,
    pub tangential: BundleEstimate<f64>,
}

/// Monte-Carlo average of [`penalty_forces`] over Gaussian perturbations of
/// `(φ, ψ)`.
pub fn smoothed_penalty_forces(
    phi: f64,
    psi: f64,
    dist: &SmoothingDistribution,
    n: usize,
    seed: u64,
    params: &PenaltyParams,
) -> Result<SmoothedForces> {
    if dist.dim() != 2 {
        return Err(Error::Dimension(format!(
            "penalty smoothing perturbs (φ, ψ), got a {}-dimensional distribution",
            dist.dim()
        )));
    }
    let batch = dist.sample(n, seed)?;
    let forces: Vec<(f64, f64)> = batch
        .samples
        .par_iter()
        .map(|w| penalty_forces(phi + w[0], psi + w[1], params))
        .collect();
    let normals: Vec<f64> = forces.iter().map(|f| f.0).collect();
    let tangentials: Vec<f64> = forces.iter().map(|f| f.1).collect();
    Ok(SmoothedForces {
        normal: scalar_estimate(&normals),
        tangential: scalar_estimate(&tangentials),
    })
}

fn scalar_estimate(values: &[f64]) -> BundleEstimate<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    BundleEstimate {
        value: mean,
        sample_count: n,
        empirical_variance: variance,
    }
}

/// Second-order pushing with penalty contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyStepParams {
    pub mass: f64,
    /// Spring pulling the robot to its command.
    pub robot_stiffness: f64,
    pub dt: f64,
    /// Coulomb coefficient between box and floor (gravity 9.81).
    #[serde(default)]
    pub floor_friction: f64,
    pub penalty: PenaltyParams,
}

impl PenaltyStepParams {
    /// `h·sqrt(k_n/m)`; semi-implicit Euler stays accurate when this is small
    /// (about 0.2 or less).
    pub fn stiffness_number(&self) -> f64 {
        self.dt * (self.penalty.normal_stiffness / self.mass).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyState1D {
    pub x_object: f64,
    pub v_object: f64,
    pub x_robot: f64,
}

const GRAVITY: f64 = 9.81;
const DIVERGENCE_BOUND: f64 = 1e6;

/// Advances the box with semi-implicit Euler under the penalty force exerted
/// by a robot to its left. The robot is in static equilibrium between its
/// command spring and the contact spring. Returns the next state and the
/// normal force applied during the step.
pub fn penalty_step_1d(
    state: &PenaltyState1D,
    command: f64,
    params: &PenaltyStepParams,
) -> Result<(PenaltyState1D, f64)> {
    let k = params.robot_stiffness;
    let kn = params.penalty.normal_stiffness;
    let x_robot = if command <= state.x_object {
        command
    } else {
        (k * command + kn * state.x_object) / (k + kn)
    };
    let (normal, _) = penalty_forces(state.x_object - x_robot, 0.0, &params.penalty);
    let h = params.dt;
    let mut v = state.v_object + h * normal / params.mass;
    let stop = h * params.floor_friction * GRAVITY;
    v = if v.abs() <= stop { 0.0 } else { v - stop * v.signum() };
    let next = PenaltyState1D {
        x_object: state.x_object + h * v,
        v_object: v,
        x_robot,
    };
    let norm = DVector::from_vec(vec![next.x_object, next.v_object, next.x_robot]).amax();
    if !norm.is_finite() || norm > DIVERGENCE_BOUND {
        return Err(Error::Diverged(format!(
            "penalty simulation left the stable regime (h·sqrt(k_n/m) = {:.3}); use a smaller time step",
            params.stiffness_number()
        )));
    }
    Ok((next, normal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stribeck() -> PenaltyParams {
        PenaltyParams::stribeck(100.0, 10.0, 0.1, 0.5).unwrap()
    }

    #[test]
    fn separated_bodies_feel_nothing() {
        assert_eq!(penalty_forces(0.1, 0.3, &stribeck()), (0.0, 0.0));
    }

    #[test]
    fn spring_force_without_slip() {
        let (fn_, ft) = penalty_forces(-0.01, 0.0, &stribeck());
        assert!((fn_ - 1.0).abs() < 1e-12);
        assert_eq!(ft, 0.0);
    }

    #[test]
    fn stribeck_jump_at_stick_speed() {
        let p = stribeck();
        let (fn_, below) = penalty_forces(-0.01, p.stick_speed, &p);
        let (_, above) = penalty_forces(-0.01, p.stick_speed * (1.0 + 1e-12), &p);
        assert!(((above - below) - p.stribeck_drop() * fn_).abs() < 1e-9);
        let continuous = PenaltyParams::continuous(100.0, 0.5, 0.1).unwrap();
        let (_, b) = penalty_forces(-0.01, 0.1, &continuous);
        let (_, a) = penalty_forces(-0.01, 0.1 + 1e-12, &continuous);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn friction_opposes_slip() {
        let p = stribeck();
        assert!(penalty_forces(-0.1, 0.05, &p).1 < 0.0);
        assert!(penalty_forces(-0.1, -0.05, &p).1 > 0.0);
        assert!(penalty_forces(-0.1, -2.0, &p).1 > 0.0);
    }

    #[test]
    fn smoothing_applies_force_at_a_distance() {
        let sigma = 0.05;
        let dist = SmoothingDistribution::from_std_devs(&[sigma, 0.01]).unwrap();
        let f = smoothed_penalty_forces(sigma, 0.0, &dist, 10_000, 7, &stribeck()).unwrap();
        assert!(f.normal.value > 0.0);
        let exact =
            smoothed_penalty_forces(-0.02, 0.03, &SmoothingDistribution::zero(2).unwrap(), 5, 1, &stribeck()).unwrap();
        let direct = penalty_forces(-0.02, 0.03, &stribeck());
        assert_eq!((exact.normal.value, exact.tangential.value), direct);
    }

    #[test]
    fn rejects_non_stribeck_parameters() {
        assert!(PenaltyParams::stribeck(100.0, 1.0, 0.1, 0.5).is_err());
        assert!(PenaltyParams::continuous(-1.0, 0.5, 0.1).is_err());
    }

    fn step_params(floor_friction: f64) -> PenaltyStepParams {
        // h·sqrt(k_n/m) = 0.05
        PenaltyStepParams {
            mass: 1.0,
            robot_stiffness: 50.0,
            dt: 0.005,
            floor_friction,
            penalty: PenaltyParams::continuous(100.0, 0.5, 0.1).unwrap(),
        }
    }

    #[test]
    fn resting_box_stays_put_without_contact() {
        let mut s = PenaltyState1D {
            x_object: 1.0,
            v_object: 0.0,
            x_robot: 0.0,
        };
        for _ in 0..100 {
            s = penalty_step_1d(&s, 0.5, &step_params(0.0)).unwrap().0;
        }
        assert_eq!(s.x_object, 1.0);
        assert_eq!(s.v_object, 0.0);
    }

    #[test]
    fn pressing_against_a_held_box_reaches_force_balance() {
        let params = step_params(1.0);
        let mut s = PenaltyState1D {
            x_object: 1.0,
            v_object: 0.0,
            x_robot: 1.0,
        };
        for _ in 0..200 {
            s = penalty_step_1d(&s, 1.1, &params).unwrap().0;
        }
        // Spring force k(x̃ − x_robot) = 50·0.1·100/150 is below μmg, so the box holds.
        assert_eq!(s.x_object, 1.0);
        let spring_force = params.robot_stiffness * (1.1 - s.x_robot);
        let depth = s.x_robot - s.x_object;
        assert!((depth - spring_force / params.penalty.normal_stiffness).abs() < 1e-12);
    }

    #[test]
    fn momentum_gain_equals_impulse() {
        let params = step_params(0.0);
        let mut s = PenaltyState1D {
            x_object: 1.0,
            v_object: 0.0,
            x_robot: 0.9,
        };
        let mut impulse = 0.0;
        for t in 0..400 {
            let command = 0.9 + 0.002 * t as f64;
            let (next, normal) = penalty_step_1d(&s, command, &params).unwrap();
            impulse += params.dt * normal;
            s = next;
        }
        assert!(impulse > 0.0);
        assert!((params.mass * s.v_object - impulse).abs() <= 0.02 * impulse);
    }

    #[test]
    fn blow_up_is_reported() {
        let mut params = step_params(0.0);
        params.mass = 1e-12;
        let s = PenaltyState1D {
            x_object: 1.0,
            v_object: 0.0,
            x_robot: 1.0,
        };
        assert!(matches!(penalty_step_1d(&s, 2.0, &params), Err(Error::Diverged(_))));
    }
}
