//! Deterministic high-accuracy evaluation of Gaussian convolutions, used as a
//! reference for the Monte-Carlo estimators.
//!
//! The integral is taken in standardized coordinates `w = L z`, truncated to
//! `|z_i| ≤ 9`, and split at the declared breakpoints of the integrand so that
//! every panel sees a smooth function. One-dimensional integrals use adaptive
//! Gauss–Kronrod (7/15); two and three dimensions use a tensor product of
//! composite Gauss–Legendre rules.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::distribution::SmoothingDistribution;
use super::functions::ScalarFunction;
use crate::error::{Error, Result};

const TRUNCATION: f64 = 9.0;
const MAX_DIM: usize = 3;
const PANEL_ORDER: usize = 8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// How the oracle obtains `∇f̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleGradient {
    /// Quadrature of `∇f` for continuous functions, the Gaussian score
    /// identity `∇f̄(x) = Σ⁻¹ E[w f(x + w)]` for functions with jumps.
    Auto,
    /// Always use the score identity (needs only function values).
    Score,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Minimum number of nodes per integration axis.
    pub points: usize,
    pub gradient: OracleGradient,
}

impl OracleOptions {
    pub fn new(points: usize) -> Self {
        Self {
            points,
            gradient: OracleGradient::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub gradient: DVector<f64>,
}

/// `(f̄(x), ∇f̄(x))` by quadrature.
pub fn convolution_oracle<F: ScalarFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dist: &SmoothingDistribution,
    quadrature_points: usize,
) -> Result<OracleValue> {
    convolution_oracle_with(f, x, dist, &OracleOptions::new(quadrature_points))
}

pub fn convolution_oracle_with<F: ScalarFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dist: &SmoothingDistribution,
    opts: &OracleOptions,
) -> Result<OracleValue> {
    let d = dist.dim();
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!(
            "quadrature oracle supports at most {MAX_DIM} dimensions, got {d}"
        )));
    }
    if x.len() != d {
        return Err(Error::Dimension(format!(
            "x has dimension {}, distribution has dimension {d}",
            x.len()
        )));
    }
    if dist.is_degenerate() {
        return Ok(OracleValue {
            value: f.value(x),
            gradient: f.gradient(x),
        });
    }

    // Columns of `map` send standardized coordinates to perturbations.
    let (map, axes): (DMatrix<f64>, Vec<usize>) = if dist.is_diagonal() {
        let axes: Vec<usize> = (0..d).filter(|&i| dist.covariance()[(i, i)] > 0.0).collect();
        let mut map = DMatrix::zeros(d, axes.len());
        for (col, &i) in axes.iter().enumerate() {
            map[(i, col)] = dist.covariance()[(i, i)].sqrt();
        }
        (map, axes)
    } else if dist.rank() == d {
        (dist.factor().clone(), Vec::new())
    } else {
        return Err(Error::Unsupported(
            "quadrature oracle needs a diagonal or full-rank covariance".into(),
        ));
    };
    let k = map.ncols();

    let use_score = opts.gradient == OracleGradient::Score || f.has_jumps();
    // Integrand layout: [f, ∇f (d entries, when needed), z f (k entries, when needed)].
    let need_grad = !use_score || k < d;
    let width = 1 + if need_grad { d } else { 0 } + if use_score { k } else { 0 };
    let integrand = |z: &[f64]| -> DVector<f64> {
        let zv = DVector::from_column_slice(z);
        let p = x + &map * &zv;
        let fv = f.value(&p);
        let mut out = DVector::zeros(width);
        out[0] = fv;
        let mut at = 1;
        if need_grad {
            out.rows_mut(1, d).copy_from(&f.gradient(&p));
            at += d;
        }
        if use_score {
            for i in 0..k {
                out[at + i] = z[i] * fv;
            }
        }
        out
    };

    let split_points = |col: usize| -> Vec<f64> {
        if axes.is_empty() {
            return Vec::new();
        }
        let axis = axes[col];
        let sigma = map[(axis, col)];
        let mut pts: Vec<f64> = f
            .breakpoints(axis)
            .into_iter()
            .map(|b| (b - x[axis]) / sigma)
            .filter(|z| z.abs() < TRUNCATION)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    };

    let total = if k == 1 {
        integrate_1d(&integrand, &split_points(0), opts.points, width)
    } else {
        let rules: Vec<Vec<(f64, f64)>> = (0..k)
            .map(|col| composite_rule(&split_points(col), opts.points))
            .collect();
        integrate_tensor(&integrand, &rules, width)
    };

    let value = total[0];
    let mut gradient = DVector::zeros(d);
    if need_grad {
        gradient.copy_from(&total.rows(1, d));
    }
    if use_score {
        let offset = 1 + if need_grad { d } else { 0 };
        let moments = total.rows(offset, k).into_owned();
        if axes.is_empty() {
            let upper = map.transpose();
            gradient = upper
                .solve_upper_triangular(&moments)
                .ok_or_else(|| Error::Unsupported("singular covariance factor".into()))?;
        } else {
            for (col, &axis) in axes.iter().enumerate() {
                gradient[axis] = moments[col] / map[(axis, col)];
            }
        }
    }
    Ok(OracleValue { value, gradient })
}

fn standard_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

fn segments(breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = vec![-TRUNCATION];
    edges.extend_from_slice(breaks);
    edges.push(TRUNCATION);
    edges.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<G: Fn(&[f64]) -> DVector<f64>>(g: &G, a: f64, b: f64, width: usize) -> (DVector<f64>, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |z: f64| g(&[z]) * standard_normal_pdf(z);
    let mid = eval(center);
    let mut kron = &mid * WGK[7];
    let mut gauss = &mid * WG[3];
    for i in 0..7 {
        let dz = half * XGK[i];
        let pair = eval(center - dz) + eval(center + dz);
        kron += &pair * WGK[i];
        if i % 2 == 1 {
            gauss += &pair * WG[i / 2];
        }
    }
    debug_assert_eq!(kron.len(), width);
    let err = (&kron - &gauss).amax() * half;
    (kron * half, err)
}

fn integrate_1d<G: Fn(&[f64]) -> DVector<f64>>(g: &G, breaks: &[f64], points: usize, width: usize) -> DVector<f64> {
    let segs = segments(breaks);
    let span = 2.0 * TRUNCATION;
    let initial = points.div_ceil(15).max(1);
    let mut pieces = Vec::new();
    for (a, b) in segs {
        let count = ((initial as f64) * (b - a) / span).ceil().max(1.0) as usize;
        let step = (b - a) / count as f64;
        for i in 0..count {
            let lo = a + step * i as f64;
            let hi = if i + 1 == count { b } else { lo + step };
            pieces.push((lo, hi));
        }
    }
    let coarse: Vec<(DVector<f64>, f64)> = pieces.iter().map(|&(a, b)| kronrod(g, a, b, width)).collect();
    let scale = coarse
        .iter()
        .fold(DVector::zeros(width), |acc, (v, _)| acc + v)
        .amax()
        .max(1.0);
    let tol = 1e-14 * scale;

    let mut total = DVector::zeros(width);
    let mut stack: Vec<(f64, f64, DVector<f64>, f64, u32)> = pieces
        .into_iter()
        .zip(coarse)
        .map(|((a, b), (v, e))| (a, b, v, e, 0))
        .collect();
    stack.reverse();
    while let Some((a, b, v, e, depth)) = stack.pop() {
        if e <= tol * (b - a) / span || depth >= 40 {
            total += v;
            continue;
        }
        let m = 0.5 * (a + b);
        let (vr, er) = kronrod(g, m, b, width);
        let (vl, el) = kronrod(g, a, m, width);
        stack.push((m, b, vr, er, depth + 1));
        stack.push((a, m, vl, el, depth + 1));
    }
    total
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Composite Gauss–Legendre rule for `∫ g(z) φ(z) dz` with the standard
/// normal density folded into the weights.
fn composite_rule(breaks: &[f64], points: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(PANEL_ORDER);
    let segs = segments(breaks);
    let span = 2.0 * TRUNCATION;
    let panels = points.div_ceil(PANEL_ORDER).max(segs.len());
    let mut rule = Vec::new();
    for (a, b) in segs {
        let count = ((panels as f64) * (b - a) / span).round().max(1.0) as usize;
        let step = (b - a) / count as f64;
        for i in 0..count {
            let lo = a + step * i as f64;
            let center = lo + 0.5 * step;
            for &(node, weight) in &base {
                let z = center + 0.5 * step * node;
                rule.push((z, 0.5 * step * weight * standard_normal_pdf(z)));
            }
        }
    }
    rule
}

fn integrate_tensor<G: Fn(&[f64]) -> DVector<f64> + Sync>(
    g: &G,
    rules: &[Vec<(f64, f64)>],
    width: usize,
) -> DVector<f64> {
    let sizes: Vec<usize> = rules.iter().map(Vec::len).collect();
    let count: usize = sizes.iter().product();
    let terms: Vec<DVector<f64>> = (0..count)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut z = [0.0; MAX_DIM];
            let mut w = 1.0;
            for (axis, rule) in rules.iter().enumerate() {
                let (node, weight) = rule[rem % sizes[axis]];
                rem /= sizes[axis];
                z[axis] = node;
                w *= weight;
            }
            if w == 0.0 {
                DVector::zeros(width)
            } else {
                g(&z[..rules.len()]) * w
            }
        })
        .collect();
    let mut total = DVector::zeros(width);
    for t in &terms {
        total += t;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothing::functions::{TestFunction, UserFunction};

    fn v(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    fn wiggly_closed_form(x: f64, sigma: f64) -> f64 {
        x * x + sigma * sigma + 0.1 * (-200.0 * sigma * sigma).exp() * (20.0 * x).sin()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let sum: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let x14: f64 = rule.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((x14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn constant_function() {
        let dist = SmoothingDistribution::isotropic(1, 0.5).unwrap();
        let r = convolution_oracle(&TestFunction::Constant(2.5), &v(0.3), &dist, 201).unwrap();
        assert!((r.value - 2.5).abs() < 1e-12);
        assert!(r.gradient[0].abs() < 1e-12);
    }

    #[test]
    fn smoothed_heaviside_at_origin() {
        let dist = SmoothingDistribution::isotropic(1, 1.0).unwrap();
        let r = convolution_oracle(&TestFunction::Heaviside, &v(0.0), &dist, 201).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!((r.gradient[0] - INV_SQRT_2PI).abs() < 1e-12);
    }

    #[test]
    fn wiggly_quadratic_matches_closed_form() {
        for &sigma in &[0.05, 0.2, 1.0] {
            let dist = SmoothingDistribution::isotropic(1, sigma).unwrap();
            for &x in &[-0.8, 0.0, 0.13, 0.5] {
                let r = convolution_oracle(&TestFunction::WigglyQuadratic, &v(x), &dist, 201).unwrap();
                let exact = wiggly_closed_form(x, sigma);
                assert!(
                    (r.value - exact).abs() <= 1e-6 * exact.abs().max(1e-3),
                    "σ={sigma} x={x}"
                );
            }
        }
        let dist = SmoothingDistribution::isotropic(1, 0.2).unwrap();
        let r = convolution_oracle(&TestFunction::WigglyQuadratic, &v(0.0), &dist, 201).unwrap();
        assert!((r.value - 0.04).abs() < 1e-10);
    }

    #[test]
    fn oracle_gradient_is_derivative_of_oracle_value() {
        let funcs = [
            TestFunction::WigglyQuadratic,
            TestFunction::Heaviside,
            TestFunction::Vee,
            TestFunction::Square,
        ];
        for f in funcs {
            for &sigma in &[0.05, 0.2, 1.0] {
                let dist = SmoothingDistribution::isotropic(1, sigma).unwrap();
                for &x in &[-0.3, 0.0, 0.02, 0.25, 0.7] {
                    let h = 1e-3 * sigma;
                    let up = convolution_oracle(&f, &v(x + h), &dist, 201).unwrap().value;
                    let down = convolution_oracle(&f, &v(x - h), &dist, 201).unwrap().value;
                    let fd = (up - down) / (2.0 * h);
                    let g = convolution_oracle(&f, &v(x), &dist, 201).unwrap().gradient[0];
                    assert!(
                        (fd - g).abs() <= 1e-4 * g.abs() + 1e-9,
                        "{f} σ={sigma} x={x}: fd {fd} vs {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn two_dimensional_tensor_rule() {
        // f(x, y) = x² + 3y, Σ = diag(0.25, 4): f̄ = x² + 0.25 + 3y
        let f = UserFunction::new(|p| p[0] * p[0] + 3.0 * p[1]);
        let dist = SmoothingDistribution::from_std_devs(&[0.5, 2.0]).unwrap();
        let x = DVector::from_vec(vec![0.4, -1.0]);
        let r = convolution_oracle(&f, &x, &dist, 128).unwrap();
        assert!((r.value - (0.16 + 0.25 - 3.0)).abs() < 1e-9, "{}", r.value);
        assert!((r.gradient[0] - 0.8).abs() < 1e-6);
        assert!((r.gradient[1] - 3.0).abs() < 1e-6);
        let score = convolution_oracle_with(
            &f,
            &x,
            &dist,
            &OracleOptions {
                points: 128,
                gradient: OracleGradient::Score,
            },
        )
        .unwrap();
        assert!((score.gradient[0] - 0.8).abs() < 1e-8);
        assert!((score.gradient[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn correlated_covariance_uses_cholesky_map() {
        let f = UserFunction::new(|p| p[0] * p[1]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let dist = SmoothingDistribution::gaussian(cov).unwrap();
        let r = convolution_oracle(&f, &DVector::zeros(2), &dist, 128).unwrap();
        assert!((r.value - 0.3).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn too_many_dimensions() {
        let dist = SmoothingDistribution::isotropic(4, 1.0).unwrap();
        assert!(matches!(
            convolution_oracle(&TestFunction::Square, &DVector::zeros(4), &dist, 11),
            Err(Error::Unsupported(_))
        ));
    }
}
