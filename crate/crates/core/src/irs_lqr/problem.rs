use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Rows of `C z ≤ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInequality {
    pub matrix: DMatrix<f64>,
    pub bound: DVector<f64>,
}

impl LinearInequality {
    pub fn new(matrix: DMatrix<f64>, bound: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != bound.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} rows, bound has {}",
                matrix.nrows(),
                bound.len()
            )));
        }
        Ok(Self { matrix, bound })
    }

    /// `lower ≤ z ≤ upper` componentwise.
    pub fn bounds(lower: &DVector<f64>, upper: &DVector<f64>) -> Result<Self> {
        let n = lower.len();
        if upper.len() != n {
            return Err(Error::Dimension("lower and upper bounds differ in length".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidConfig("lower bound exceeds upper bound".into()));
        }
        let mut matrix = DMatrix::zeros(2 * n, n);
        let mut bound = DVector::zeros(2 * n);
        for i in 0..n {
            matrix[(i, i)] = 1.0;
            bound[i] = upper[i];
            matrix[(n + i, i)] = -1.0;
            bound[n + i] = -lower[i];
        }
        Ok(Self { matrix, bound })
    }

    pub fn max_violation(&self, z: &DVector<f64>) -> f64 {
        (&self.matrix * z - &self.bound).iter().fold(0.0f64, |a, &v| a.max(v))
    }
}

/// Finite-horizon tracking problem shared by every MPC subproblem of a run.
///
/// Cost: `‖x_T − x^d_T‖²_{Q_d} + Σ_{t<T} ‖x_t − x^d_t‖²_{Q_t} + ‖u_t‖²_{R_t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcProblem {
    pub horizon: usize,
    pub initial_state: DVector<f64>,
    /// `Q_t` for `t < T`.
    pub state_cost: Vec<DMatrix<f64>>,
    /// `R_t` for `t < T`.
    pub input_cost: Vec<DMatrix<f64>>,
    pub terminal_cost: DMatrix<f64>,
    /// `x^d_t` for `t ≤ T`.
    pub desired: Vec<DVector<f64>>,
    /// Input constraints for `t < T`.
    pub input_constraints: Vec<Option<LinearInequality>>,
    /// State constraints for `t ≤ T`.
    pub state_constraints: Vec<Option<LinearInequality>>,
}

impl MpcProblem {
    /// Same weights at every step, no constraints.
    pub fn time_invariant(
        initial_state: DVector<f64>,
        horizon: usize,
        state_cost: DMatrix<f64>,
        input_cost: DMatrix<f64>,
        terminal_cost: DMatrix<f64>,
        desired: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let p = Self {
            horizon,
            initial_state,
            state_cost: vec![state_cost; horizon],
            input_cost: vec![input_cost; horizon],
            terminal_cost,
            desired,
            input_constraints: vec![None; horizon],
            state_constraints: vec![None; horizon + 1],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_input_bounds(mut self, lower: &DVector<f64>, upper: &DVector<f64>) -> Result<Self> {
        let c = LinearInequality::bounds(lower, upper)?;
        self.input_constraints = vec![Some(c); self.horizon];
        self.validate()?;
        Ok(self)
    }

    /// The same state constraint at every knot `t ≥ 1`.
    pub fn with_state_constraint(mut self, constraint: LinearInequality) -> Result<Self> {
        self.state_constraints = (0..=self.horizon)
            .map(|t| if t == 0 { None } else { Some(constraint.clone()) })
            .collect();
        self.validate()?;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.initial_state.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_cost.first().map_or(0, |r| r.nrows())
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.horizon;
        let n = self.state_dim();
        if t == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.state_cost.len() != t || self.input_cost.len() != t {
            return Err(Error::Dimension(format!("expected {t} running cost matrices")));
        }
        if self.desired.len() != t + 1 {
            return Err(Error::Dimension(format!(
                "desired trajectory has {} knots, expected {}",
                self.desired.len(),
                t + 1
            )));
        }
        if self.input_constraints.len() != t || self.state_constraints.len() != t + 1 {
            return Err(Error::Dimension("constraint lists do not match the horizon".into()));
        }
        let m = self.input_dim();
        if m == 0 {
            return Err(Error::InvalidConfig("input dimension must be positive".into()));
        }
        for q in self.state_cost.iter().chain(std::iter::once(&self.terminal_cost)) {
            check_square("state cost", q, n)?;
            check_definite("state cost", q, false)?;
        }
        for r in &self.input_cost {
            check_square("input cost", r, m)?;
            check_definite("input cost", r, true)?;
        }
        for xd in &self.desired {
            if xd.len() != n {
                return Err(Error::Dimension("desired state has the wrong dimension".into()));
            }
        }
        for c in self.input_constraints.iter().flatten() {
            if c.matrix.ncols() != m {
                return Err(Error::Dimension("input constraint has the wrong width".into()));
            }
        }
        for c in self.state_constraints.iter().flatten() {
            if c.matrix.ncols() != n {
                return Err(Error::Dimension("state constraint has the wrong width".into()));
            }
        }
        Ok(())
    }
}

fn check_square(what: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_definite(what: &str, m: &DMatrix<f64>, strict: bool) -> Result<()> {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(Error::InvalidConfig(format!("{what} is not symmetric")));
    }
    let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    let ok = if strict { min > 0.0 } else { min >= -1e-12 * scale };
    if !ok {
        let kind = if strict {
            "positive definite"
        } else {
            "positive semidefinite"
        };
        return Err(Error::InvalidConfig(format!(
            "{what} must be {kind}, minimum eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Running plus terminal tracking cost of a state/input trajectory.
pub fn trajectory_cost(problem: &MpcProblem, states: &[DVector<f64>], inputs: &[DVector<f64>]) -> f64 {
    let t = problem.horizon;
    debug_assert_eq!(states.len(), t + 1);
    debug_assert_eq!(inputs.len(), t);
    let mut cost = 0.0;
    for i in 0..t {
        let e = &states[i] - &problem.desired[i];
        cost += e.dot(&(&problem.state_cost[i] * &e));
        cost += inputs[i].dot(&(&problem.input_cost[i] * &inputs[i]));
    }
    let e = &states[t] - &problem.desired[t];
    cost + e.dot(&(&problem.terminal_cost * &e))
}
