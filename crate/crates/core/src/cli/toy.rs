use std::time::Instant;

use rayon::prelude::*;

use super::args::{ToyArgs, ToyKind};
use super::job::{check_positive, evaluate, usage, JobOutcome, JobSpec, Metrics};
use super::report::{BaselineSummary, DatasetInfo, RunReport, RunSummary, SeriesPoint, Timing};
use super::{to_json_pretty, write_text, CliResult};
use crate::data::{save_csv, GaussianToy, LabeledDataset, RegressionToy, Task};
use crate::error::Error;
use crate::jdot::{jdot_fit_observed, AlphaSetting, HalfStep, Phase};

pub fn run(args: &ToyArgs) -> CliResult<()> {
    let started = Instant::now();
    let (task, source, target) = generate(args)?;
    let spec = spec_for(args, task)?;
    let alphas = if args.alpha.is_empty() {
        default_alphas(args.kind)
    } else {
        args.alpha.clone()
    };

    let runs: Vec<(JobOutcome, Vec<SeriesPoint>)> = alphas
        .par_iter()
        .map(|&alpha| run_alpha(&source, &target, &JobSpec { alpha, ..spec.clone() }, args.within))
        .collect::<CliResult<_>>()?;

    let first = &runs[0].0;
    let mut baseline = BaselineSummary {
        kernel: first.trace.kernel,
        metrics: first.baseline.clone(),
        model_file: None,
    };
    let mut summaries: Vec<RunSummary> = alphas
        .iter()
        .zip(&runs)
        .map(|(&alpha, (outcome, series))| {
            let mut s = RunSummary::from_outcome(alpha, spec.lambda, spec.ot.to_string(), outcome);
            s.series = series.clone();
            s
        })
        .collect();

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        save_csv(&source, &dir.join("source.csv"))?;
        save_csv(&target, &dir.join("target.csv"))?;
        baseline.model_file = Some("baseline_model.json".into());
        write_text(&dir.join("baseline_model.json"), &first.trace.initial_model.to_json()?)?;
        for (k, (summary, (outcome, _))) in summaries.iter_mut().zip(&runs).enumerate() {
            let name = format!("model_{k}.json");
            write_text(&dir.join(&name), &outcome.trace.final_model.to_json()?)?;
            summary.model_file = Some(name);
        }
        write_series(&dir.join("series.csv"), task, &summaries)?;
    }

    let report = RunReport {
        command: "toy",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        config: serde_json::to_value(args).map_err(Error::from)?,
        dataset: DatasetInfo::new(task, &source, &target),
        baseline,
        runs: summaries,
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

pub fn default_alphas(kind: ToyKind) -> Vec<AlphaSetting> {
    match kind {
        ToyKind::RotatedGaussians => [0.1, 0.5, 1.0, 10.0].map(AlphaSetting::Value).to_vec(),
        ToyKind::Regression1d => vec![AlphaSetting::Value(1.0)],
    }
}

/// Source and target datasets of a toy problem, both labeled.
pub fn generate(args: &ToyArgs) -> CliResult<(Task, LabeledDataset, LabeledDataset)> {
    generate_toy(args.kind, args.seed, args.n, args.rotation, args.shift, args.noise)
}

pub fn generate_toy(
    kind: ToyKind,
    seed: u64,
    n: Option<usize>,
    rotation: Option<f64>,
    shift: Option<f64>,
    noise: Option<f64>,
) -> CliResult<(Task, LabeledDataset, LabeledDataset)> {
    match kind {
        ToyKind::RotatedGaussians => {
            if shift.is_some() || noise.is_some() {
                return Err(usage("--shift and --noise apply to regression-1d only"));
            }
            let mut toy = GaussianToy {
                seed,
                ..GaussianToy::default()
            };
            if let Some(n) = n {
                if n == 0 {
                    return Err(usage("--n must be at least 1"));
                }
                toy.n_per_class = n;
            }
            if let Some(r) = rotation {
                if !r.is_finite() {
                    return Err(usage("--rotation must be finite"));
                }
                toy.rotation = r;
            }
            let (s, t) = toy.generate()?;
            Ok((Task::Classification, s, t))
        }
        ToyKind::Regression1d => {
            if rotation.is_some() {
                return Err(usage("--rotation applies to rotated-gaussians only"));
            }
            let mut toy = RegressionToy {
                seed,
                ..RegressionToy::default()
            };
            if let Some(n) = n {
                if n < 2 {
                    return Err(usage("--n must be at least 2"));
                }
                toy.n = n;
            }
            if let Some(s) = shift {
                if !s.is_finite() {
                    return Err(usage("--shift must be finite"));
                }
                toy.shift = s;
            }
            if let Some(v) = noise {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(usage("--noise must be non-negative"));
                }
                toy.noise = v;
            }
            let (s, t) = toy.generate()?;
            Ok((Task::Regression, s, t))
        }
    }
}

fn spec_for(args: &ToyArgs, task: Task) -> CliResult<JobSpec> {
    if args.iters == 0 {
        return Err(usage("--iters must be at least 1"));
    }
    check_positive("--lambda", args.lambda)?;
    if let Some(r) = args.within {
        check_positive("--within", r)?;
    }
    Ok(JobSpec {
        task,
        alpha: AlphaSetting::Heuristic,
        lambda: args.lambda,
        ot: args.ot,
        kernel: args.model.kernel_spec().map_err(usage)?,
        fit_intercept: args.model.intercept,
        learner_tol: args.model.learner_tol,
        learner_max_iter: args.model.learner_max_iter,
        max_iter: args.iters,
        rel_tol: 1e-5,
        early_stop: false,
        seed: args.seed,
    })
}

fn run_alpha(
    source: &LabeledDataset,
    target: &LabeledDataset,
    spec: &JobSpec,
    within: Option<f64>,
) -> CliResult<(JobOutcome, Vec<SeriesPoint>)> {
    let mut per_iter: Vec<crate::Result<Option<Metrics>>> = Vec::new();
    let trace = jdot_fit_observed(source, target.x(), &spec.config(), |view| {
        if view.iter > 0 {
            per_iter.push(evaluate(view.model, target, within));
        }
    })?;
    let learner_steps: Vec<&HalfStep> = trace.steps.iter().filter(|s| s.phase == Phase::Learner).collect();
    let mut series = Vec::with_capacity(per_iter.len());
    for (step, metrics) in learner_steps.iter().zip(per_iter) {
        let metrics = metrics?;
        series.push(SeriesPoint {
            iter: step.iter,
            accuracy: metrics.as_ref().and_then(|m| m.accuracy),
            mse: metrics.as_ref().and_then(|m| m.mse),
            objective: step.objective,
        });
    }
    let baseline = evaluate(&trace.initial_model, target, within)?;
    let jdot = evaluate(&trace.final_model, target, within)?;
    Ok((JobOutcome { trace, baseline, jdot }, series))
}

fn write_series(path: &std::path::Path, task: Task, runs: &[RunSummary]) -> CliResult<()> {
    let metric = match task {
        Task::Classification => "accuracy",
        Task::Regression => "mse",
    };
    let mut out = format!("alpha,iter,{metric},objective\n");
    for run in runs {
        for p in &run.series {
            let value = p.accuracy.or(p.mse).map_or(String::new(), |v| v.to_string());
            out.push_str(&format!("{},{},{},{}\n", run.alpha, p.iter, value, p.objective));
        }
    }
    write_text(path, &out)
}
