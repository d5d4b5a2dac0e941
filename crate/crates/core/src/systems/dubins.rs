use nalgebra::{DMatrix, DVector};

use super::Dynamics;

/// Planar unicycle: state `(px, py, ψ)`, input `(v, ω)`, explicit Euler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DubinsCar {
    pub dt: f64,
}

impl DubinsCar {
    pub fn new(dt: f64) -> Self {
        Self { dt }
    }
}

impl Dynamics for DubinsCar {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (s, c) = x[2].sin_cos();
        DVector::from_vec(vec![
            x[0] + self.dt * u[0] * c,
            x[1] + self.dt * u[0] * s,
            x[2] + self.dt * u[1],
        ])
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = self.dt;
        let (s, c) = x[2].sin_cos();
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -h * u[0] * s, 0.0, 1.0, h * u[0] * c, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(3, 2, &[h * c, 0.0, h * s, 0.0, 0.0, h]);
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_steps() {
        let car = DubinsCar::new(0.1);
        let x = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        assert_eq!(car.step(&x, &DVector::zeros(2)), x);
        let straight = car.step(&x, &DVector::from_vec(vec![1.0, 0.0]));
        assert!((straight - DVector::from_vec(vec![0.1, 0.0, 0.0])).amax() < 1e-15);
        let turning = car.step(&x, &DVector::from_vec(vec![1.0, 1.0]));
        assert!((turning - DVector::from_vec(vec![0.1, 0.0, 0.1])).amax() < 1e-15);
    }

    #[test]
    fn heading_sensitivity_equals_speed() {
        let car = DubinsCar::new(1.0);
        let (a, _) = car.jacobians(&DVector::zeros(3), &DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(a[(1, 2)], 1.0);
    }
}
