//! JSON run reports. Field order is fixed by declaration order; wall-clock
//! time lives under the final `timing` key and is the only field that varies
//! between identical runs.

use serde::Serialize;

use super::job::{JobOutcome, Metrics};
use crate::data::{LabeledDataset, Task};
use crate::jdot::{AlphaSetting, HalfStep, Phase};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub task: Task,
    pub n_source: usize,
    pub n_target: usize,
    pub n_features: usize,
    pub target_labeled: bool,
}

impl DatasetInfo {
    pub fn new(task: Task, source: &LabeledDataset, target: &LabeledDataset) -> Self {
        Self {
            task,
            n_source: source.len(),
            n_target: target.len(),
            n_features: source.n_features(),
            target_labeled: target.labels().is_some(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineSummary {
    pub kernel: Kernel,
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_file: Option<String>,
}

/// Target metric and objective after one iteration.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub alpha_setting: AlphaSetting,
    pub alpha: f64,
    pub lambda: f64,
    pub ot: String,
    pub kernel: Kernel,
    pub iterations: usize,
    pub converged_at: Option<usize>,
    pub final_objective: f64,
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_file: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
    pub trace: Vec<HalfStep>,
}

impl RunSummary {
    pub fn from_outcome(alpha_setting: AlphaSetting, lambda: f64, ot: String, outcome: &JobOutcome) -> Self {
        let t = &outcome.trace;
        Self {
            alpha_setting,
            alpha: t.alpha,
            lambda,
            ot,
            kernel: t.kernel,
            iterations: t.iterations,
            converged_at: t.converged_at,
            final_objective: final_objective(&t.steps),
            metrics: outcome.jdot.clone(),
            model_file: None,
            series: Vec::new(),
            trace: t.steps.clone(),
        }
    }
}

/// Objective after the last learner step.
pub fn final_objective(steps: &[HalfStep]) -> f64 {
    steps
        .iter()
        .rev()
        .find(|s| s.phase == Phase::Learner)
        .map_or(f64::NAN, |s| s.objective)
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub dataset: DatasetInfo,
    pub baseline: BaselineSummary,
    pub runs: Vec<RunSummary>,
    pub timing: Timing,
}
