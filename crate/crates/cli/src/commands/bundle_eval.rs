use std::path::{Path, PathBuf};

use nalgebra::DVector;

use bundleopt::smoothing::{
    bundled_objective_estimate, convolution_oracle, first_order_gradient_bundle, zero_order_gradient_bundle,
    SmoothingDistribution, TestFunction,
};

use crate::config::BundleEvalConfig;
use crate::error::CliResult;
use crate::output::{fmt, Table};

pub const SCHEMA: &str = "bundleopt.bundle_eval/v1";

/// Sweeps a catalog function over the grid with one fixed sample set and
/// writes Monte-Carlo and quadrature columns side by side.
pub fn run(cfg: &BundleEvalConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let f = match cfg.function.parse::<TestFunction>()? {
        TestFunction::Constant(_) => TestFunction::Constant(cfg.constant.unwrap_or(1.0)),
        other => other,
    };
    let dist = SmoothingDistribution::isotropic(1, cfg.sigma)?;
    let mut table = Table::create(
        out,
        "bundle_eval.csv",
        SCHEMA,
        &[
            "x",
            "bundled_estimate",
            "bundled_se",
            "oracle_value",
            "first_order_gradient",
            "first_order_se",
            "zero_order_gradient",
            "zero_order_se",
            "oracle_gradient",
        ],
    )?;
    for x in cfg.grid.values() {
        let point = DVector::from_element(1, x);
        let value = bundled_objective_estimate(&f, &point, &dist, cfg.samples, cfg.seed)?;
        let first = first_order_gradient_bundle(&f, &point, &dist, cfg.samples, cfg.seed)?;
        let zero = zero_order_gradient_bundle(&f, &point, &dist, cfg.samples, cfg.seed)?;
        let oracle = convolution_oracle(&f, &point, &dist, cfg.quadrature_points)?;
        table.row([
            fmt(x),
            fmt(value.value),
            fmt(value.standard_error()),
            fmt(oracle.value),
            fmt(first.value[0]),
            fmt(first.standard_error()[0]),
            fmt(zero.value[0]),
            fmt(zero.standard_error()[0]),
            fmt(oracle.gradient[0]),
        ])?;
    }
    Ok(vec![table.finish()?])
}
