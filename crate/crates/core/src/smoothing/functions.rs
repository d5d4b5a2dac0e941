//! Scalar objectives used by the smoothing estimators, including the
//! non-smooth catalog functions that motivate them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::Error;

/// Absolute step of the central finite differences used when no analytic
/// derivative is available.
pub const FD_STEP: f64 = 1e-6;

/// A scalar function of a vector argument, differentiable almost everywhere.
///
/// At points where the function is not differentiable, `gradient` returns the
/// one-sided right derivative.
pub trait ScalarFunction: Sync {
    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        central_difference_gradient(|p| self.value(p), x)
    }

    /// Coordinates along `axis` where the function has a kink or a jump.
    fn breakpoints(&self, _axis: usize) -> Vec<f64> {
        Vec::new()
    }

    /// True when the function has jump discontinuities, so that its a.e.
    /// gradient misses the Dirac mass at the jump.
    fn has_jumps(&self) -> bool {
        false
    }
}

pub fn central_difference_gradient<F>(f: F, x: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut probe = x.clone();
    DVector::from_fn(x.len(), |i, _| {
        let xi = x[i];
        probe[i] = xi + FD_STEP;
        let up = f(&probe);
        probe[i] = xi - FD_STEP;
        let down = f(&probe);
        probe[i] = xi;
        (up - down) / (2.0 * FD_STEP)
    })
}

/// Catalog of one-dimensional test functions. Applied to a vector, each acts
/// as a separable sum over coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `x² + 0.1·sin(20x)`: a convex bowl with many shallow local minima.
    WigglyQuadratic,
    /// `1` if `x ≥ 0`, else `0`.
    Heaviside,
    /// `−1 + x` if `x ≥ 0`, else `1 − x`.
    Vee,
    /// `x²`.
    Square,
    Constant(f64),
}

impl TestFunction {
    pub fn scalar_value(&self, x: f64) -> f64 {
        match *self {
            Self::WigglyQuadratic => x * x + 0.1 * (20.0 * x).sin(),
            Self::Heaviside => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Vee => {
                if x >= 0.0 {
                    -1.0 + x
                } else {
                    1.0 - x
                }
            }
            Self::Square => x * x,
            Self::Constant(c) => c,
        }
    }

    pub fn scalar_derivative(&self, x: f64) -> f64 {
        match *self {
            Self::WigglyQuadratic => 2.0 * x + 2.0 * (20.0 * x).cos(),
            Self::Heaviside | Self::Constant(_) => 0.0,
            Self::Vee => {
                if x >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Square => 2.0 * x,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::WigglyQuadratic => "wiggly_quadratic",
            Self::Heaviside => "heaviside",
            Self::Vee => "vee",
            Self::Square => "square",
            Self::Constant(_) => "constant",
        }
    }
}

impl ScalarFunction for TestFunction {
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|&xi| self.scalar_value(xi)).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|xi| self.scalar_derivative(xi))
    }

    fn breakpoints(&self, _axis: usize) -> Vec<f64> {
        match self {
            Self::Heaviside | Self::Vee => vec![0.0],
            _ => Vec::new(),
        }
    }

    fn has_jumps(&self) -> bool {
        matches!(self, Self::Heaviside | Self::Vee)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "constant({c})"),
            other => f.write_str(other.id()),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// Accepts the catalog ids; `constant` defaults to the value 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wiggly_quadratic" => Ok(Self::WigglyQuadratic),
            "heaviside" => Ok(Self::Heaviside),
            "vee" => Ok(Self::Vee),
            "square" => Ok(Self::Square),
            "constant" => Ok(Self::Constant(1.0)),
            other => Err(Error::InvalidConfig(format!(
                "unknown test function `{other}` (expected wiggly_quadratic, heaviside, vee, square or constant)"
            ))),
        }
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// User-supplied objective built from closures.
pub struct UserFunction {
    value: Box<ValueFn>,
    gradient: Option<Box<GradientFn>>,
    breakpoints: Vec<Vec<f64>>,
    has_jumps: bool,
}

impl UserFunction {
    pub fn new(value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Box::new(value),
            gradient: None,
            breakpoints: Vec::new(),
            has_jumps: false,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }

    /// Declare non-smooth locations per axis; `jumps` marks discontinuities.
    pub fn with_breakpoints(mut self, per_axis: Vec<Vec<f64>>, jumps: bool) -> Self {
        self.breakpoints = per_axis;
        self.has_jumps = jumps;
        self
    }
}

impl ScalarFunction for UserFunction {
    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.gradient {
            Some(g) => g(x),
            None => central_difference_gradient(|p| (self.value)(p), x),
        }
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        self.breakpoints.get(axis).cloned().unwrap_or_default()
    }

    fn has_jumps(&self) -> bool {
        self.has_jumps
    }
}
