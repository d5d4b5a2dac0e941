use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rayon::prelude::*;

use bundleopt::contact::FrictionModel;
use bundleopt::irs_lqr::{irs_lqr_run, GradientMode, IrsLqrOptions, IrsLqrResult, RunStatus};
use bundleopt::tasks::{planar_push_task, Task, TaskKind};

use crate::config::PlanConfig;
use crate::error::{CliError, CliResult};
use crate::output::{fmt, Table};

pub const RESULTS_SCHEMA: &str = "bundleopt.plan.results/v1";
pub const TRAJECTORY_SCHEMA: &str = "bundleopt.plan.trajectories/v1";
pub const TIMING_SCHEMA: &str = "bundleopt.plan.timing/v1";

fn build_task(cfg: &PlanConfig) -> CliResult<Task> {
    let task = match (cfg.task, cfg.friction_model) {
        (TaskKind::PlanarPush, Some(model)) => planar_push_task(model)?,
        (TaskKind::PlanarPush, None) => planar_push_task(FrictionModel::Anitescu)?,
        (kind, _) => kind.build(cfg.instance_seed)?,
    };
    Ok(task)
}

fn base_options(cfg: &PlanConfig, task: &Task) -> CliResult<IrsLqrOptions> {
    let mut opts = task.options.clone();
    if let Some(samples) = cfg.samples {
        opts.samples = samples;
    }
    if let Some(std) = &cfg.sigma0_std {
        let dim = task.problem.state_dim() + task.problem.input_dim();
        if std.len() != dim {
            return Err(CliError::Config(format!(
                "sigma0_std needs {dim} entries (state then input) for task {}, got {}",
                task.kind.id(),
                std.len()
            )));
        }
        opts.sigma0 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, std.iter().map(|s| s * s)));
    }
    if let Some(schedule) = cfg.schedule {
        opts.schedule = schedule;
    }
    if let Some(max) = cfg.max_iterations {
        opts.max_iterations = max;
    }
    Ok(opts)
}

fn status_id(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::MaxIterations => "max_iterations",
        RunStatus::Diverged => "diverged",
    }
}

struct Run {
    mode: GradientMode,
    seed: u64,
    result: IrsLqrResult,
    elapsed: Duration,
}

/// Runs every `(mode, seed)` pair of the config and writes the per-iteration
/// cost table and the final trajectories.
pub fn run(cfg: &PlanConfig, out: &Path, timing: bool) -> CliResult<Vec<PathBuf>> {
    let task = build_task(cfg)?;
    let base = base_options(cfg, &task)?;
    let jobs: Vec<(GradientMode, u64)> = cfg
        .modes
        .iter()
        .flat_map(|&m| cfg.seeds().into_iter().map(move |s| (m, s)))
        .collect();
    let runs: Vec<CliResult<Run>> = jobs
        .par_iter()
        .map(|&(mode, seed)| {
            let opts = IrsLqrOptions {
                mode,
                seed,
                ..base.clone()
            };
            let start = Instant::now();
            let result = irs_lqr_run(task.system.as_ref(), &task.problem, &task.initial_inputs, &opts)?;
            log::info!(
                "{} {mode} seed {seed}: cost {:.6e} -> {:.6e} ({})",
                task.kind.id(),
                result.history[0].cost,
                result.final_iterate().cost,
                status_id(result.status)
            );
            Ok(Run {
                mode,
                seed,
                result,
                elapsed: start.elapsed(),
            })
        })
        .collect();
    let runs = runs.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut results = Table::create(
        out,
        "results.csv",
        RESULTS_SCHEMA,
        &[
            "task",
            "mode",
            "seed",
            "iteration",
            "cost",
            "relaxed_mpc_steps",
            "status",
        ],
    )?;
    for run in &runs {
        for it in &run.result.history {
            results.row([
                task.kind.id().to_string(),
                run.mode.id().to_string(),
                run.seed.to_string(),
                it.iteration.to_string(),
                fmt(it.cost),
                it.relaxed_steps.len().to_string(),
                status_id(run.result.status).to_string(),
            ])?;
        }
    }

    let (n, m) = (task.problem.state_dim(), task.problem.input_dim());
    let mut header: Vec<String> = ["task", "mode", "seed", "t"].iter().map(|s| s.to_string()).collect();
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..m).map(|j| format!("u{j}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut traj = Table::create(out, "trajectories.csv", TRAJECTORY_SCHEMA, &header_refs)?;
    for run in &runs {
        let last = run.result.final_iterate();
        for (t, x) in last.states.iter().enumerate() {
            let mut row = vec![
                task.kind.id().to_string(),
                run.mode.id().to_string(),
                run.seed.to_string(),
                t.to_string(),
            ];
            row.extend(x.iter().map(|&v| fmt(v)));
            // The terminal knot has no input.
            match last.inputs.get(t) {
                Some(u) => row.extend(u.iter().map(|&v| fmt(v))),
                None => row.extend(std::iter::repeat_n(String::new(), m)),
            }
            traj.row(&row)?;
        }
    }
    let mut outputs = vec![results.finish()?, traj.finish()?];

    if timing {
        let mut t = Table::create(
            out,
            "timing.csv",
            TIMING_SCHEMA,
            &["mode", "seed", "iterations", "wall_seconds"],
        )?;
        for run in &runs {
            t.row([
                run.mode.id().to_string(),
                run.seed.to_string(),
                (run.result.history.len() - 1).to_string(),
                fmt(run.elapsed.as_secs_f64()),
            ])?;
        }
        outputs.push(t.finish()?);
    }
    Ok(outputs)
}
