use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrotorParams {
    pub mass: f64,
    pub gravity: f64,
    /// Distance from the center of mass to each rotor.
    pub arm_length: f64,
    /// Principal moments of inertia `(Ixx, Iyy, Izz)`.
    pub inertia: [f64; 3],
    /// Reaction torque about the body z axis per unit rotor thrust.
    pub yaw_coefficient: f64,
    pub dt: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 0.5,
            gravity: 9.81,
            arm_length: 0.175,
            inertia: [0.0023, 0.0023, 0.004],
            yaw_coefficient: 0.0245,
            dt: 0.02,
        }
    }
}

/// Twelve-state quadrotor in plus configuration.
///
/// State: position `p` (3), Z-Y-X Euler angles `(φ, θ, ψ)` (3), world-frame
/// velocity `v` (3), body angular rate `ω` (3). Input: the four rotor thrusts,
/// rotors 1 and 3 on the body x axis, 2 and 4 on the body y axis, with 1/3
/// spinning opposite to 2/4. Explicit Euler. The Euler-angle kinematics are
/// singular at `θ = ±π/2`; states there are outside the model's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrotor {
    pub params: QuadrotorParams,
}

impl Quadrotor {
    pub fn new(params: QuadrotorParams) -> Self {
        Self { params }
    }

    pub fn hover_thrust(&self) -> f64 {
        self.params.mass * self.params.gravity / 4.0
    }

    /// Collective thrust and body torques produced by rotor thrusts `f`.
    pub fn mix(&self, f: &DVector<f64>) -> (f64, [f64; 3]) {
        let l = self.params.arm_length;
        let k = self.params.yaw_coefficient;
        let thrust = f[0] + f[1] + f[2] + f[3];
        let torque = [l * (f[1] - f[3]), l * (f[2] - f[0]), k * (f[0] - f[1] + f[2] - f[3])];
        (thrust, torque)
    }

    fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let (sphi, cphi) = x[3].sin_cos();
        let (sth, cth) = x[4].sin_cos();
        let (spsi, cpsi) = x[5].sin_cos();
        let tth = sth / cth;
        let (wx, wy, wz) = (x[9], x[10], x[11]);
        let [ixx, iyy, izz] = p.inertia;
        let (thrust, tau) = self.mix(u);
        let t_over_m = thrust / p.mass;

        let mut dx = DVector::zeros(12);
        dx[0] = x[6];
        dx[1] = x[7];
        dx[2] = x[8];
        dx[3] = wx + (sphi * wy + cphi * wz) * tth;
        dx[4] = cphi * wy - sphi * wz;
        dx[5] = (sphi * wy + cphi * wz) / cth;
        dx[6] = t_over_m * (cpsi * sth * cphi + spsi * sphi);
        dx[7] = t_over_m * (spsi * sth * cphi - cpsi * sphi);
        dx[8] = t_over_m * cth * cphi - p.gravity;
        dx[9] = (tau[0] - (izz - iyy) * wy * wz) / ixx;
        dx[10] = (tau[1] - (ixx - izz) * wx * wz) / iyy;
        dx[11] = (tau[2] - (iyy - ixx) * wx * wy) / izz;
        dx
    }
}

impl Dynamics for Quadrotor {
    fn state_dim(&self) -> usize {
        12
    }

    fn input_dim(&self) -> usize {
        4
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        x + self.derivative(x, u) * self.params.dt
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = &self.params;
        let h = p.dt;
        let (sphi, cphi) = x[3].sin_cos();
        let (sth, cth) = x[4].sin_cos();
        let (spsi, cpsi) = x[5].sin_cos();
        let tth = sth / cth;
        let (wx, wy, wz) = (x[9], x[10], x[11]);
        let [ixx, iyy, izz] = p.inertia;
        let (thrust, _) = self.mix(u);
        let tm = thrust / p.mass;

        // continuous-time Jacobians
        let mut jx = DMatrix::zeros(12, 12);
        jx[(0, 6)] = 1.0;
        jx[(1, 7)] = 1.0;
        jx[(2, 8)] = 1.0;

        let a = sphi * wy + cphi * wz;
        let da_dphi = cphi * wy - sphi * wz;
        jx[(3, 3)] = da_dphi * tth;
        jx[(3, 4)] = a / (cth * cth);
        jx[(3, 9)] = 1.0;
        jx[(3, 10)] = sphi * tth;
        jx[(3, 11)] = cphi * tth;
        jx[(4, 3)] = -sphi * wy - cphi * wz;
        jx[(4, 10)] = cphi;
        jx[(4, 11)] = -sphi;
        jx[(5, 3)] = da_dphi / cth;
        jx[(5, 4)] = a * sth / (cth * cth);
        jx[(5, 10)] = sphi / cth;
        jx[(5, 11)] = cphi / cth;

        jx[(6, 3)] = tm * (-cpsi * sth * sphi + spsi * cphi);
        jx[(6, 4)] = tm * cpsi * cth * cphi;
        jx[(6, 5)] = tm * (-spsi * sth * cphi + cpsi * sphi);
        jx[(7, 3)] = tm * (-spsi * sth * sphi - cpsi * cphi);
        jx[(7, 4)] = tm * spsi * cth * cphi;
        jx[(7, 5)] = tm * (cpsi * sth * cphi + spsi * sphi);
        jx[(8, 3)] = -tm * cth * sphi;
        jx[(8, 4)] = -tm * sth * cphi;

        jx[(9, 10)] = -(izz - iyy) * wz / ixx;
        jx[(9, 11)] = -(izz - iyy) * wy / ixx;
        jx[(10, 9)] = -(ixx - izz) * wz / iyy;
        jx[(10, 11)] = -(ixx - izz) * wx / iyy;
        jx[(11, 9)] = -(iyy - ixx) * wy / izz;
        jx[(11, 10)] = -(iyy - ixx) * wx / izz;

        let mut ju = DMatrix::zeros(12, 4);
        let body_z = [
            cpsi * sth * cphi + spsi * sphi,
            spsi * sth * cphi - cpsi * sphi,
            cth * cphi,
        ];
        let l = p.arm_length;
        let k = p.yaw_coefficient;
        for j in 0..4 {
            for r in 0..3 {
                ju[(6 + r, j)] = body_z[r] / p.mass;
            }
        }
        let roll = [0.0, l, 0.0, -l];
        let pitch = [-l, 0.0, l, 0.0];
        let yaw = [k, -k, k, -k];
        for j in 0..4 {
            ju[(9, j)] = roll[j] / ixx;
            ju[(10, j)] = pitch[j] / iyy;
            ju[(11, j)] = yaw[j] / izz;
        }

        (DMatrix::identity(12, 12) + jx * h, ju * h)
    }
}
