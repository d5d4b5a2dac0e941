//! Dense strictly convex quadratic programs
//!
//! ```text
//! minimize ½ zᵀPz + qᵀz   subject to   Gz ≤ h,  A z = b
//! ```
//!
//! solved with the Goldfarb–Idnani dual active-set method. The method starts
//! from the unconstrained minimizer and adds violated constraints one at a
//! time while keeping the dual iterate feasible, so every intermediate point
//! is optimal for the constraints added so far. Infeasibility is detected when
//! a violated constraint cannot be satisfied by any dual step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Smallest admissible eigenvalue of the cost matrix.
pub const MIN_EIGENVALUE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct QpProblem {
    p: DMatrix<f64>,
    q: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    p_chol: Cholesky<f64, Dyn>,
}

impl QpProblem {
    /// Inequality-constrained problem. Use zero-row `g` for an unconstrained one.
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        let n = q.len();
        Self::with_equalities(p, q, g, h, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn with_equalities(
        p: DMatrix<f64>,
        q: DVector<f64>,
        g: DMatrix<f64>,
        h: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
    ) -> Result<Self> {
        let n = q.len();
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::Dimension(format!(
                "P is {}x{}, q has length {n}",
                p.nrows(),
                p.ncols()
            )));
        }
        if g.ncols() != n || g.nrows() != h.len() {
            return Err(Error::Dimension(format!(
                "G is {}x{}, h has length {}, expected {n} columns",
                g.nrows(),
                g.ncols(),
                h.len()
            )));
        }
        if a_eq.ncols() != n || a_eq.nrows() != b_eq.len() {
            return Err(Error::Dimension(format!(
                "A_eq is {}x{}, b_eq has length {}, expected {n} columns",
                a_eq.nrows(),
                a_eq.ncols(),
                b_eq.len()
            )));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&p)
            || !finite(&g)
            || !finite(&a_eq)
            || q.iter().chain(h.iter()).chain(b_eq.iter()).any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig("QP data must be finite".into()));
        }
        let scale = p.amax().max(1.0);
        if (&p - p.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidConfig("QP cost matrix is not symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(p.clone()).eigenvalues.min();
        if min_eig <= MIN_EIGENVALUE {
            return Err(Error::InvalidConfig(format!(
                "QP cost matrix must be positive definite, minimum eigenvalue is {min_eig:e}"
            )));
        }
        let p_chol = Cholesky::new(p.clone())
            .ok_or_else(|| Error::InvalidConfig("QP cost matrix failed Cholesky factorization".into()))?;
        Ok(Self {
            p,
            q,
            g,
            h,
            a_eq,
            b_eq,
            p_chol,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.q.len()
    }
    pub fn num_inequalities(&self) -> usize {
        self.h.len()
    }
    pub fn num_equalities(&self) -> usize {
        self.b_eq.len()
    }
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }
    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }
    pub fn a_eq(&self) -> &DMatrix<f64> {
        &self.a_eq
    }
    pub fn b_eq(&self) -> &DVector<f64> {
        &self.b_eq
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.p * z)) + self.q.dot(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: DVector<f64>,
    /// Multipliers of `Gz ≤ h`.
    pub lambda: DVector<f64>,
    /// Multipliers of `Az = b`.
    pub nu: DVector<f64>,
    pub status: QpStatus,
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    /// Cap on active-set changes.
    pub max_iterations: usize,
    /// Constraint violation below which a row counts as satisfied.
    pub feasibility_tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            feasibility_tol: 1e-11,
        }
    }
}

/// Largest violation of the first-order optimality conditions: stationarity,
/// primal feasibility (inequalities and equalities), dual feasibility and
/// complementary slackness.
pub fn kkt_residual(p: &QpProblem, z: &DVector<f64>, lambda: &DVector<f64>, nu: &DVector<f64>) -> f64 {
    let stationarity = (&p.p * z + &p.q + p.g.transpose() * lambda + p.a_eq.transpose() * nu).amax();
    let slack = &p.g * z - &p.h;
    let primal = slack.iter().fold(0.0f64, |acc, &s| acc.max(s));
    let equality = if p.b_eq.is_empty() {
        0.0
    } else {
        (&p.a_eq * z - &p.b_eq).amax()
    };
    let dual = lambda.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let complementarity = lambda
        .iter()
        .zip(slack.iter())
        .fold(0.0f64, |acc, (l, s)| acc.max((l * s).abs()));
    stationarity.max(primal).max(equality).max(dual).max(complementarity)
}

/// One constraint in the solver's internal form `nᵀz ≥ b`.
struct Row {
    normal: DVector<f64>,
    bound: f64,
    /// Index into the equality block, or `None` for an inequality.
    equality: Option<(usize, f64)>,
    inequality: Option<usize>,
}

struct ActiveSet {
    rows: Vec<Row>,
    multipliers: Vec<f64>,
}

impl ActiveSet {
    fn normals(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, self.rows.len());
        for (j, r) in self.rows.iter().enumerate() {
            m.set_column(j, &r.normal);
        }
        m
    }
}

enum StepOutcome {
    Added,
    Infeasible,
    IterationLimit,
}

pub fn solve_qp(p: &QpProblem, opts: &QpOptions) -> QpSolution {
    let n = p.num_variables();
    let mut z = p.p_chol.solve(&(-&p.q));
    let mut active = ActiveSet {
        rows: Vec::new(),
        multipliers: Vec::new(),
    };
    let mut in_active = vec![false; p.num_inequalities()];
    let mut iterations = 0usize;

    let finish = |z: DVector<f64>, active: &ActiveSet, status: QpStatus, iterations: usize| {
        let mut lambda = DVector::zeros(p.num_inequalities());
        let mut nu = DVector::zeros(p.num_equalities());
        for (row, &u) in active.rows.iter().zip(&active.multipliers) {
            if let Some(i) = row.inequality {
                lambda[i] = u;
            }
            if let Some((e, sign)) = row.equality {
                nu[e] = -sign * u;
            }
        }
        let kkt = kkt_residual(p, &z, &lambda, &nu);
        QpSolution {
            z,
            lambda,
            nu,
            status,
            kkt_residual: kkt,
            iterations,
        }
    };

    for e in 0..p.num_equalities() {
        let a = p.a_eq.row(e).transpose();
        let b = p.b_eq[e];
        let s = a.dot(&z) - b;
        let sign = if s > 0.0 { -1.0 } else { 1.0 };
        let row = Row {
            normal: a * sign,
            bound: b * sign,
            equality: Some((e, sign)),
            inequality: None,
        };
        match add_constraint(p, &mut z, &mut active, row, opts, &mut iterations, &mut in_active) {
            StepOutcome::Added => {}
            StepOutcome::Infeasible => return finish(z, &active, QpStatus::Infeasible, iterations),
            StepOutcome::IterationLimit => return finish(z, &active, QpStatus::MaxIterations, iterations),
        }
    }

    loop {
        let slack = &p.g * &z - &p.h;
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..p.num_inequalities() {
            if in_active[i] {
                continue;
            }
            let scale = 1.0 + p.h[i].abs() + p.g.row(i).amax() * z.amax();
            let violation = slack[i] / scale;
            if slack[i] > opts.feasibility_tol * scale && worst.is_none_or(|(_, w)| violation > w) {
                worst = Some((i, violation));
            }
        }
        let Some((i, _)) = worst else {
            return finish(z, &active, QpStatus::Optimal, iterations);
        };
        let row = Row {
            normal: -p.g.row(i).transpose(),
            bound: -p.h[i],
            equality: None,
            inequality: Some(i),
        };
        match add_constraint(p, &mut z, &mut active, row, opts, &mut iterations, &mut in_active) {
            StepOutcome::Added => {}
            StepOutcome::Infeasible => return finish(z, &active, QpStatus::Infeasible, iterations),
            StepOutcome::IterationLimit => return finish(z, &active, QpStatus::MaxIterations, iterations),
        }
        debug_assert_eq!(n, z.len());
    }
}

/// Steps the primal-dual pair until `row` holds with equality and joins the
/// active set, dropping active inequalities whose multipliers reach zero.
fn add_constraint(
    p: &QpProblem,
    z: &mut DVector<f64>,
    active: &mut ActiveSet,
    row: Row,
    opts: &QpOptions,
    iterations: &mut usize,
    in_active: &mut [bool],
) -> StepOutcome {
    let n = z.len();
    let hinv_np = p.p_chol.solve(&row.normal);
    let curvature_scale = row.normal.dot(&hinv_np).max(f64::MIN_POSITIVE);
    let mut added_multiplier = 0.0;
    loop {
        *iterations += 1;
        if *iterations > opts.max_iterations {
            return StepOutcome::IterationLimit;
        }
        let s = row.normal.dot(z) - row.bound;
        let (dz, r) = if active.rows.is_empty() {
            (hinv_np.clone(), DVector::zeros(0))
        } else {
            let normals = active.normals(n);
            let m = p.p_chol.solve(&normals);
            let schur = normals.transpose() * &m;
            let rhs = m.transpose() * &row.normal;
            let r = match schur.clone().cholesky() {
                Some(c) => c.solve(&rhs),
                None => match schur.lu().solve(&rhs) {
                    Some(r) => r,
                    None => return StepOutcome::Infeasible,
                },
            };
            (&hinv_np - m * &r, r)
        };
        let curvature = dz.dot(&row.normal);
        let dependent = curvature <= 1e-12 * curvature_scale;

        let mut partial: Option<(usize, f64)> = None;
        for (j, active_row) in active.rows.iter().enumerate() {
            if active_row.inequality.is_some() && r[j] > 0.0 {
                let t = active.multipliers[j] / r[j];
                if partial.is_none_or(|(_, best)| t < best) {
                    partial = Some((j, t));
                }
            }
        }
        let full = if dependent {
            None
        } else {
            Some((-s / curvature).max(0.0))
        };

        match (partial, full) {
            (None, None) => {
                // A redundant equality that already holds can be skipped.
                if row.equality.is_some() && s.abs() <= opts.feasibility_tol * (1.0 + row.bound.abs()) {
                    return StepOutcome::Added;
                }
                return StepOutcome::Infeasible;
            }
            (Some((j, t1)), full) if full.is_none_or(|t2| t1 < t2) => {
                if !dependent {
                    *z += &dz * t1;
                }
                for (u, rj) in active.multipliers.iter_mut().zip(r.iter()) {
                    *u -= t1 * rj;
                }
                added_multiplier += t1;
                let dropped = active.rows.remove(j);
                active.multipliers.remove(j);
                if let Some(i) = dropped.inequality {
                    in_active[i] = false;
                }
            }
            (_, Some(t2)) => {
                *z += &dz * t2;
                for (u, rj) in active.multipliers.iter_mut().zip(r.iter()) {
                    *u -= t2 * rj;
                }
                added_multiplier += t2;
                if let Some(i) = row.inequality {
                    in_active[i] = true;
                }
                active.rows.push(row);
                active.multipliers.push(added_multiplier);
                return StepOutcome::Added;
            }
            (Some(_), None) => unreachable!(),
        }
    }
}
