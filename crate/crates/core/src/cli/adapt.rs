use std::time::Instant;

use super::args::{AdaptArgs, FitArgs};
use super::job::{check_positive, load_pair, run_job, usage, JobSpec};
use super::report::{BaselineSummary, DatasetInfo, RunReport, RunSummary, Timing};
use super::{to_json_pretty, write_text, CliResult};
use crate::data::Task;
use crate::error::Error;
use crate::jdot::{AlphaSetting, OtSolver};

pub fn run(args: &AdaptArgs) -> CliResult<()> {
    let started = Instant::now();
    let task: Task = args.data.task.into();
    let spec = job_spec(task, args.alpha, args.lambda, args.ot, &args.fit)?;
    let (source, target) = load_pair(
        &args.source,
        &args.target,
        task,
        &args.data.label_columns,
        args.data.feature_columns.as_deref(),
        args.data.n_classes,
    )?;
    let outcome = run_job(&source, &target, &spec, args.fit.within)?;

    let mut run = RunSummary::from_outcome(args.alpha, args.lambda, args.ot.to_string(), &outcome);
    let mut baseline = BaselineSummary {
        kernel: outcome.trace.kernel,
        metrics: outcome.baseline.clone(),
        model_file: None,
    };
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        write_text(&dir.join("model.json"), &outcome.trace.final_model.to_json()?)?;
        write_text(
            &dir.join("baseline_model.json"),
            &outcome.trace.initial_model.to_json()?,
        )?;
        write_text(&dir.join("trace.jsonl"), &outcome.trace.to_jsonl()?)?;
        run.model_file = Some("model.json".into());
        baseline.model_file = Some("baseline_model.json".into());
    }

    let report = RunReport {
        command: "adapt",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.fit.seed,
        config: serde_json::to_value(args).map_err(Error::from)?,
        dataset: DatasetInfo::new(task, &source, &target),
        baseline,
        runs: vec![run],
        timing: Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    };
    let text = to_json_pretty(&report)?;
    match &args.out {
        Some(dir) => write_text(&dir.join("report.json"), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn job_spec(task: Task, alpha: AlphaSetting, lambda: f64, ot: OtSolver, fit: &FitArgs) -> CliResult<JobSpec> {
    if fit.iters == 0 {
        return Err(usage("--iters must be at least 1"));
    }
    check_positive("--lambda", lambda)?;
    check_positive("--rel-tol", fit.rel_tol)?;
    check_positive("--learner-tol", fit.model.learner_tol)?;
    if fit.model.learner_max_iter == 0 {
        return Err(usage("--learner-max-iter must be at least 1"));
    }
    if let Some(r) = fit.within {
        check_positive("--within", r)?;
    }
    Ok(JobSpec {
        task,
        alpha,
        lambda,
        ot,
        kernel: fit.model.kernel_spec().map_err(usage)?,
        fit_intercept: fit.model.intercept,
        learner_tol: fit.model.learner_tol,
        learner_max_iter: fit.model.learner_max_iter,
        max_iter: fit.iters,
        rel_tol: fit.rel_tol,
        early_stop: !fit.full_iters,
        seed: fit.seed,
    })
}
