use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CliError, CliResult};
use crate::data::{load_csv, load_descriptor, CsvSchema, Domain, LabeledDataset, Labels, Task};
use crate::error::Error;
use crate::jdot::{jdot_fit, AlphaSetting, JdotConfig, JdotTrace, OtSolver};
use crate::kernel::KernelSpec;
use crate::learners::{ModelTask, Predictor};
use crate::metrics::{accuracy, mse, within_range_accuracy};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithinRange {
    pub radius: f64,
    pub accuracy: f64,
}

/// Metrics of one model on one labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_range: Option<WithinRange>,
}

impl Metrics {
    /// The headline number: accuracy for classification, MSE for regression.
    pub fn primary(&self) -> f64 {
        self.accuracy.or(self.mse).unwrap_or(f64::NAN)
    }
}

/// Metrics of `model` on `ds`, or `None` when `ds` has no labels.
pub fn evaluate(model: &Predictor, ds: &LabeledDataset, within: Option<f64>) -> crate::Result<Option<Metrics>> {
    let Some(labels) = ds.labels() else {
        return Ok(None);
    };
    let n = ds.len();
    match (model.task, labels) {
        (ModelTask::ClassificationOva, Labels::Classes { indices, .. }) => {
            let pred = model.predict_classes(ds.x())?;
            Ok(Some(Metrics {
                n,
                accuracy: Some(accuracy(&pred, indices)?),
                mse: None,
                within_range: None,
            }))
        }
        (ModelTask::Regression, Labels::Values(y)) => {
            let pred = model.scores(ds.x())?;
            let within_range = match within {
                Some(radius) => Some(WithinRange {
                    radius,
                    accuracy: within_range_accuracy(pred.view(), y.view(), radius)?,
                }),
                None => None,
            };
            Ok(Some(Metrics {
                n,
                accuracy: None,
                mse: Some(mse(pred.view(), y.view())?),
                within_range,
            }))
        }
        (task, labels) => Err(Error::Schema(format!(
            "model task {task:?} does not match {:?} labels",
            labels.task()
        ))),
    }
}

/// Load a CSV file with `schema`, or a JSON dataset descriptor (by `.json`
/// extension) whose own schema must declare the same task.
pub fn load_dataset(path: &Path, schema: &CsvSchema, domain: Domain) -> CliResult<LabeledDataset> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_json {
        return Ok(load_csv(path, schema, domain)?);
    }
    let mut desc = load_descriptor(path)?;
    if desc.schema.task != schema.task {
        return Err(Error::Schema(format!(
            "{}: descriptor declares task {:?}, expected {:?}",
            path.display(),
            desc.schema.task,
            schema.task
        ))
        .into());
    }
    if desc.schema.n_classes.is_none() {
        desc.schema.n_classes = schema.n_classes;
    }
    desc.schema.require_labels = schema.require_labels;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(desc.load(&base, domain)?)
}

/// Load a labeled source and a target with optional labels. For
/// classification the target is read with the source's class count.
pub fn load_pair(
    source: &Path,
    target: &Path,
    task: Task,
    label_columns: &[String],
    feature_columns: Option<&[String]>,
    n_classes: Option<usize>,
) -> CliResult<(LabeledDataset, LabeledDataset)> {
    let mut schema = CsvSchema::new(task);
    schema.label_columns = label_columns.to_vec();
    schema.feature_columns = feature_columns.map(<[String]>::to_vec);
    schema.n_classes = n_classes;
    let src = load_dataset(source, &schema, Domain::Source)?;
    if let Some(Labels::Classes { n_classes, .. }) = src.labels() {
        schema.n_classes = Some(*n_classes);
    }
    let tgt = load_dataset(target, &schema.labels_optional(), Domain::Target)?;
    if src.n_features() != tgt.n_features() {
        return Err(Error::Schema(format!(
            "source has {} features, target has {}",
            src.n_features(),
            tgt.n_features()
        ))
        .into());
    }
    Ok((src, tgt))
}

/// Settings for one JDOT fit, as assembled from flags.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub task: Task,
    pub alpha: AlphaSetting,
    pub lambda: f64,
    pub ot: OtSolver,
    pub kernel: KernelSpec,
    pub fit_intercept: bool,
    pub learner_tol: f64,
    pub learner_max_iter: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub early_stop: bool,
    pub seed: u64,
}

impl JobSpec {
    pub fn config(&self) -> JdotConfig {
        let mut cfg = JdotConfig::new(self.task);
        cfg.alpha = self.alpha;
        cfg.lambda = self.lambda;
        cfg.ot = self.ot;
        cfg.kernel = self.kernel;
        cfg.fit_intercept = self.fit_intercept;
        cfg.learner_tol = self.learner_tol;
        cfg.learner_max_iter = self.learner_max_iter;
        cfg.max_iter = self.max_iter;
        cfg.rel_tol = self.rel_tol;
        cfg.early_stop = self.early_stop;
        cfg.seed = self.seed;
        cfg
    }
}

pub struct JobOutcome {
    pub trace: JdotTrace,
    pub baseline: Option<Metrics>,
    pub jdot: Option<Metrics>,
}

/// Fit JDOT and evaluate it and its source-only initial model on the target.
pub fn run_job(
    source: &LabeledDataset,
    target: &LabeledDataset,
    spec: &JobSpec,
    within: Option<f64>,
) -> CliResult<JobOutcome> {
    let trace = jdot_fit(source, target.x(), &spec.config())?;
    let baseline = evaluate(&trace.initial_model, target, within)?;
    let jdot = evaluate(&trace.final_model, target, within)?;
    Ok(JobOutcome { trace, baseline, jdot })
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}
