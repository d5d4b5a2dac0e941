use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;

use bundleopt::contact::{step_2d_anitescu, step_2d_exact, Contact2DParams, Contact2DState};
use bundleopt::smoothing::{
    bundled_objective_estimate, convolution_oracle_with, zero_order_gradient_bundle, OracleGradient, OracleOptions,
    SmoothingDistribution, UserFunction,
};

use crate::config::{Bundling, ContactProbeConfig};
use crate::error::CliResult;
use crate::output::{fmt, Table};

pub const SCHEMA: &str = "bundleopt.contact_probe/v1";

fn box_position(state: Contact2DState, params: Contact2DParams, relaxed: bool) -> UserFunction {
    UserFunction::new(move |c: &DVector<f64>| {
        let command = [c[0], c[1]];
        if relaxed {
            step_2d_anitescu(&state, command, &params)
                .expect("the relaxed contact QP is always feasible")
                .0
                .x_object
        } else {
            step_2d_exact(&state, command, &params).0.x_object
        }
    })
}

/// `(value, ∂/∂ỹ)` of the bundled box position at `command`.
fn bundled(
    f: &UserFunction,
    command: &DVector<f64>,
    dist: &SmoothingDistribution,
    bundling: Bundling,
    seed: u64,
) -> CliResult<(f64, f64)> {
    match bundling {
        Bundling::Quadrature { points } => {
            let opts = OracleOptions {
                points,
                gradient: OracleGradient::Score,
            };
            let r = convolution_oracle_with(f, command, dist, &opts)?;
            Ok((r.value, r.gradient[1]))
        }
        Bundling::MonteCarlo { samples } => {
            let value = bundled_objective_estimate(f, command, dist, samples, seed)?;
            let grad = zero_order_gradient_bundle(f, command, dist, samples, seed)?;
            Ok((value.value, grad.value[1]))
        }
    }
}

/// Evaluates the next box position over a grid of sphere commands for the
/// exact and relaxed models and their bundled versions.
pub fn run(cfg: &ContactProbeConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let params = cfg.params;
    let state = cfg.start_state();
    let dist = SmoothingDistribution::isotropic(2, cfg.sigma)?;
    let exact = box_position(state, params, false);
    let relaxed = box_position(state, params, true);
    let commands: Vec<(f64, f64)> = cfg
        .command_x
        .values()
        .into_iter()
        .flat_map(|x| cfg.command_gap.values().into_iter().map(move |g| (x, g)))
        .collect();

    let rows: Vec<CliResult<Vec<String>>> = commands
        .par_iter()
        .map(|&(x, gap)| {
            let y = params.touching_height() + gap;
            let (e, ed) = step_2d_exact(&state, [x, y], &params);
            let (r, rd) = step_2d_anitescu(&state, [x, y], &params)?;
            let c = DVector::from_vec(vec![x, y]);
            let (be, be_dy) = bundled(&exact, &c, &dist, cfg.bundling, cfg.seed)?;
            let (br, br_dy) = bundled(&relaxed, &c, &dist, cfg.bundling, cfg.seed)?;
            Ok(vec![
                fmt(x),
                fmt(y),
                fmt(e.x_object),
                fmt(r.x_object),
                ed.mode.id().to_string(),
                rd.mode.id().to_string(),
                fmt(be),
                fmt(br),
                fmt(be_dy),
                fmt(br_dy),
            ])
        })
        .collect();

    let mut table = Table::create(
        out,
        "contact_probe.csv",
        SCHEMA,
        &[
            "cmd_x",
            "cmd_y",
            "exact",
            "relaxed",
            "exact_mode",
            "relaxed_mode",
            "bundled_exact",
            "bundled_relaxed",
            "bundled_exact_dy",
            "bundled_relaxed_dy",
        ],
    )?;
    for row in rows {
        table.row(row?)?;
    }
    Ok(vec![table.finish()?])
}
