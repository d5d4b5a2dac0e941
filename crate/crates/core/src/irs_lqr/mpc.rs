//! Shrinking-horizon MPC on an affine model of the dynamics.
//!
//! The dynamics `x_{t+1} = A_t x_t + B_t u_t + c_t` are eliminated by
//! substitution, leaving a QP over the stacked inputs `(u_j, …, u_{T−1})`
//! whose Hessian is positive definite whenever every `R_t` is.

use nalgebra::{DMatrix, DVector};

use super::problem::MpcProblem;
use crate::error::{Error, Result};
use crate::qp::{solve_qp, QpOptions, QpProblem, QpSolution, QpStatus};
use crate::systems::LinearizedDynamics;

/// Weight of the squared slack added to state constraints when the MPC QP is
/// infeasible.
pub const SLACK_PENALTY: f64 = 1e6;

/// The QP of one MPC step together with the affine map from its inputs to the
/// predicted states.
#[derive(Debug, Clone)]
pub struct CondensedQp {
    pub qp: QpProblem,
    /// Number of predicted dynamics steps, `T − j`.
    pub stages: usize,
    /// Number of state-constraint rows (one slack each when relaxed).
    pub state_rows: usize,
    /// Predicted `x_{j+s} = offsets[s] + maps[s] U` for `s = 0..=stages`.
    pub offsets: Vec<DVector<f64>>,
    pub maps: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct MpcStep {
    /// First optimal input `u*_j`.
    pub input: DVector<f64>,
    /// Whole planned input sequence.
    pub plan: Vec<DVector<f64>>,
    /// State constraints had to be softened to find a solution.
    pub relaxed: bool,
    pub stages: usize,
}

/// Builds the QP for step `j` from state `x_j`. `linearizations[t]` is the
/// model used for the transition out of knot `t`.
pub fn build_condensed_qp(
    problem: &MpcProblem,
    linearizations: &[LinearizedDynamics],
    j: usize,
    x_j: &DVector<f64>,
    relax: bool,
) -> Result<CondensedQp> {
    let horizon = problem.horizon;
    if j >= horizon {
        return Err(Error::InvalidConfig(format!(
            "MPC start {j} is not before the horizon {horizon}"
        )));
    }
    if linearizations.len() < horizon {
        return Err(Error::Dimension(format!(
            "need {horizon} linearizations, got {}",
            linearizations.len()
        )));
    }
    let n = problem.state_dim();
    let m = problem.input_dim();
    if x_j.len() != n {
        return Err(Error::Dimension("MPC initial state has the wrong dimension".into()));
    }
    let stages = horizon - j;
    let nu = stages * m;

    let mut offsets = vec![x_j.clone()];
    let mut maps = vec![DMatrix::zeros(n, nu)];
    for s in 0..stages {
        let lin = &linearizations[j + s];
        let next_offset = &lin.a * &offsets[s] + &lin.c;
        let mut next_map = &lin.a * &maps[s];
        let mut block = next_map.columns_mut(s * m, m);
        block += &lin.b;
        offsets.push(next_offset);
        maps.push(next_map);
    }

    let mut hessian = DMatrix::zeros(nu, nu);
    let mut gradient = DVector::zeros(nu);
    for s in 1..=stages {
        let t = j + s;
        let weight = if s == stages {
            &problem.terminal_cost
        } else {
            &problem.state_cost[t]
        };
        let wg = weight * &maps[s];
        hessian += maps[s].transpose() * &wg;
        gradient += wg.transpose() * (&offsets[s] - &problem.desired[t]);
    }
    for s in 0..stages {
        let mut block = hessian.view_mut((s * m, s * m), (m, m));
        block += &problem.input_cost[j + s];
    }
    hessian *= 2.0;
    gradient *= 2.0;
    hessian = (&hessian + hessian.transpose()) * 0.5;

    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for s in 0..stages {
        if let Some(c) = &problem.input_constraints[j + s] {
            for r in 0..c.matrix.nrows() {
                let mut row = DVector::zeros(nu);
                row.rows_mut(s * m, m).copy_from(&c.matrix.row(r).transpose());
                rows.push((row, c.bound[r]));
            }
        }
    }
    // State constraints at knot j are fixed by x_j and cannot be influenced.
    let mut state_rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for s in 1..=stages {
        if let Some(c) = &problem.state_constraints[j + s] {
            let coeffs = &c.matrix * &maps[s];
            let rhs = &c.bound - &c.matrix * &offsets[s];
            for r in 0..c.matrix.nrows() {
                state_rows.push((coeffs.row(r).transpose(), rhs[r]));
            }
        }
    }

    let slack = if relax { state_rows.len() } else { 0 };
    let dim = nu + slack;
    let mut p = DMatrix::zeros(dim, dim);
    p.view_mut((0, 0), (nu, nu)).copy_from(&hessian);
    let mut q = DVector::zeros(dim);
    q.rows_mut(0, nu).copy_from(&gradient);
    for i in 0..slack {
        p[(nu + i, nu + i)] = 2.0 * SLACK_PENALTY;
    }
    let total_rows = rows.len() + state_rows.len() + slack;
    let mut g = DMatrix::zeros(total_rows, dim);
    let mut h = DVector::zeros(total_rows);
    let mut r = 0;
    for (row, b) in &rows {
        g.view_mut((r, 0), (1, nu)).copy_from(&row.transpose());
        h[r] = *b;
        r += 1;
    }
    for (i, (row, b)) in state_rows.iter().enumerate() {
        g.view_mut((r, 0), (1, nu)).copy_from(&row.transpose());
        if relax {
            g[(r, nu + i)] = -1.0;
        }
        h[r] = *b;
        r += 1;
    }
    for i in 0..slack {
        g[(r, nu + i)] = -1.0;
        r += 1;
    }
    Ok(CondensedQp {
        qp: QpProblem::new(p, q, g, h)?,
        stages,
        state_rows: state_rows.len(),
        offsets,
        maps,
    })
}

/// Solves the MPC subproblem at step `j` and returns its first input. An
/// infeasible QP is retried with slack on the state constraints.
pub fn mpc_solve(
    problem: &MpcProblem,
    linearizations: &[LinearizedDynamics],
    j: usize,
    x_j: &DVector<f64>,
) -> Result<MpcStep> {
    let m = problem.input_dim();
    let opts = QpOptions::default();
    let strict = build_condensed_qp(problem, linearizations, j, x_j, false)?;
    let sol = solve_qp(&strict.qp, &opts);
    let (sol, stages, relaxed): (QpSolution, usize, bool) = match sol.status {
        QpStatus::Optimal => (sol, strict.stages, false),
        QpStatus::Infeasible if strict.state_rows > 0 => {
            log::warn!("MPC at step {j} infeasible; softening state constraints");
            let soft = build_condensed_qp(problem, linearizations, j, x_j, true)?;
            let sol = solve_qp(&soft.qp, &opts);
            if sol.status != QpStatus::Optimal {
                return Err(Error::QpFailure(format!(
                    "relaxed MPC at step {j} ended with {:?}",
                    sol.status
                )));
            }
            (sol, soft.stages, true)
        }
        status => {
            return Err(Error::QpFailure(format!("MPC at step {j} ended with {status:?}")));
        }
    };
    let plan: Vec<DVector<f64>> = (0..stages).map(|s| sol.z.rows(s * m, m).into_owned()).collect();
    Ok(MpcStep {
        input: plan[0].clone(),
        plan,
        relaxed,
        stages,
    })
}
