//! Independent reference solvers shared by the integration tests.
#![allow(dead_code)]

use bundleopt::contact::{Contact1DParams, Contact1DState, ContactMode1D};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves every equality-constrained subproblem obtained by treating a subset
/// of rows as active and keeps the best primal-feasible point.
pub fn enumerate_active_sets(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = q.len();
    let m = h.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if rows.len() > n {
            continue;
        }
        let k = rows.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(p);
        rhs.rows_mut(0, n).copy_from(&(-q));
        for (j, &i) in rows.iter().enumerate() {
            for c in 0..n {
                kkt[(n + j, c)] = g[(i, c)];
                kkt[(c, n + j)] = g[(i, c)];
            }
            rhs[n + j] = h[i];
        }
        let svd = kkt.clone().svd(true, true);
        if svd.singular_values.min() < 1e-10 * svd.singular_values.max() {
            continue;
        }
        let Ok(sol) = svd.solve(&rhs, 1e-14) else { continue };
        let z = sol.rows(0, n).into_owned();
        if (g * &z - h).iter().any(|&s| s > 1e-9) {
            continue;
        }
        let obj = 0.5 * z.dot(&(p * &z)) + q.dot(&z);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, z));
        }
    }
    best.map(|(_, z)| z)
}

/// Random strictly convex QP that is feasible by construction.
pub fn random_qp(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(0..=8);
    let mut sample = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let base = sample(n, n);
    let p = base.transpose() * &base + DMatrix::identity(n, n);
    let q = sample(n, 1).column(0) * 3.0;
    let g = sample(m, n);
    let z0 = sample(n, 1).column(0).into_owned();
    let margin = sample(m, 1).column(0).abs() * 0.5;
    let h = &g * z0 + margin;
    (p, q, g, h)
}

/// Solves the 1D pushing LCP by enumerating its two modes with a generic
/// linear solver. Unknowns: `(x_object⁺, x_robot⁺, λ)`.
pub fn lcp_oracle_1d(s: &Contact1DState, cmd: f64, p: &Contact1DParams) -> Option<(ContactMode1D, f64, f64)> {
    let (m, h, k) = (p.mass, p.dt, p.stiffness);
    let mut found = None;
    for mode in [ContactMode1D::Separation, ContactMode1D::Contact] {
        // m(xo⁺ − xo)/h = λ ; hk(cmd − xr⁺) = λ ; mode row
        let mut a = DMatrix::zeros(3, 3);
        let mut b = DVector::zeros(3);
        a[(0, 0)] = m / h;
        a[(0, 2)] = -1.0;
        b[0] = m * s.x_object / h;
        a[(1, 1)] = h * k;
        a[(1, 2)] = 1.0;
        b[1] = h * k * cmd;
        match mode {
            ContactMode1D::Separation => a[(2, 2)] = 1.0,
            ContactMode1D::Contact => {
                a[(2, 0)] = 1.0;
                a[(2, 1)] = -1.0;
            }
        }
        let z = a.lu().solve(&b)?;
        let gap = z[0] - z[1];
        if z[2] >= -1e-12 && gap >= -1e-12 && found.is_none() {
            found = Some((mode, z[0], z[1]));
        }
    }
    found
}

/// Backward Riccati recursion for `Σ xᵀQx + uᵀRu + x_Tᵀ Q_T x_T`;
/// returns the optimal cost from `x0`.
pub fn riccati_cost(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    qt: &DMatrix<f64>,
    x0: &DVector<f64>,
    horizon: usize,
) -> f64 {
    let mut p = qt.clone();
    for _ in 0..horizon {
        let btp = b.transpose() * &p;
        let gain = (r + &btp * b).lu().solve(&(&btp * a)).unwrap();
        p = q + a.transpose() * &p * a - a.transpose() * &p * b * gain;
        p = (&p + p.transpose()) * 0.5;
    }
    x0.dot(&(&p * x0))
}
