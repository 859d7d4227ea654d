//! Parameter grids. Rows come out in grid order (alpha outermost, then
//! lambda, then OT solver) whatever order the workers finish in.

use rayon::prelude::*;

use super::adapt::job_spec;
use super::args::SweepArgs;
use super::job::{load_pair, run_job, usage, JobSpec};
use super::report::final_objective;
use super::toy::generate_toy;
use super::{write_text, CliResult};
use crate::data::{LabeledDataset, Task};
use crate::jdot::{AlphaSetting, OtSolver};

#[derive(Debug, Clone, Copy)]
struct Cell {
    alpha: AlphaSetting,
    lambda: f64,
    ot: OtSolver,
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    if args.alpha.is_empty() || args.lambda.is_empty() || args.ot.is_empty() {
        return Err(usage("sweep grid is empty"));
    }
    let (task, source, target) = inputs(args)?;
    let cells: Vec<Cell> = args
        .alpha
        .iter()
        .flat_map(|&alpha| {
            args.lambda
                .iter()
                .flat_map(move |&lambda| args.ot.iter().map(move |&ot| Cell { alpha, lambda, ot }))
        })
        .collect();
    // Flag errors are usage errors for the whole sweep, not per-cell failures.
    let specs: Vec<JobSpec> = cells
        .iter()
        .map(|c| job_spec(task, c.alpha, c.lambda, c.ot, &args.fit))
        .collect::<CliResult<_>>()?;

    let workers = match args.workers {
        Some(0) => return Err(usage("worker count must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| usage(format!("cannot start {workers} workers: {e}")))?;
    let rows: Vec<String> = pool.install(|| {
        cells
            .par_iter()
            .zip(specs.par_iter())
            .map(|(cell, spec)| row(cell, spec, &source, &target, args.fit.within))
            .collect()
    });

    let metric = match task {
        Task::Classification => "accuracy",
        Task::Regression => "mse",
    };
    let mut out = format!(
        "alpha,lambda,ot,alpha_value,iterations,converged_at,final_objective,\
         baseline_{metric},{metric},within_range_accuracy,error\n"
    );
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    match &args.out {
        Some(path) => write_text(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn inputs(args: &SweepArgs) -> CliResult<(Task, LabeledDataset, LabeledDataset)> {
    if let Some(kind) = args.toy {
        return generate_toy(kind, args.fit.seed, None, None, None, None);
    }
    let (Some(source), Some(target), Some(task)) = (&args.source, &args.target, args.task) else {
        return Err(usage("sweep needs --toy or --source, --target and --task"));
    };
    let task: Task = task.into();
    let (s, t) = load_pair(
        source,
        target,
        task,
        &args.label_columns,
        args.feature_columns.as_deref(),
        args.n_classes,
    )?;
    Ok((task, s, t))
}

fn row(cell: &Cell, spec: &JobSpec, source: &LabeledDataset, target: &LabeledDataset, within: Option<f64>) -> String {
    let key = format!("{},{},{}", cell.alpha, cell.lambda, cell.ot);
    let num = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    match run_job(source, target, spec, within) {
        Ok(o) => {
            let t = &o.trace;
            format!(
                "{key},{},{},{},{},{},{},{},",
                t.alpha,
                t.iterations,
                t.converged_at.map_or(String::new(), |c| c.to_string()),
                final_objective(&t.steps),
                num(o.baseline.as_ref().map(|m| m.primary())),
                num(o.jdot.as_ref().map(|m| m.primary())),
                num(o
                    .jdot
                    .as_ref()
                    .and_then(|m| m.within_range.as_ref())
                    .map(|w| w.accuracy)),
            )
        }
        Err(e) => {
            let msg = e.to_string().replace('"', "'");
            format!("{key},,,,,,,,\"{msg}\"")
        }
    }
}
