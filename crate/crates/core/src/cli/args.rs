use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::Task;
use crate::jdot::{AlphaSetting, OtSolver};
use crate::kernel::KernelSpec;

#[derive(Debug, Parser)]
#[command(
    name = "jdot",
    version,
    about = "Joint distribution optimal transport for domain adaptation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded toy problem: source-only baseline plus JDOT for each alpha.
    Toy(ToyArgs),
    /// Adapt from a labeled source dataset to a target dataset.
    Adapt(AdaptArgs),
    /// Grid over alpha, lambda and OT solver; one CSV row per combination.
    Sweep(SweepArgs),
    /// Evaluate a saved model on a labeled dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyKind {
    RotatedGaussians,
    #[value(name = "regression-1d")]
    #[serde(rename = "regression-1d")]
    Regression1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskArg {
    Regression,
    Classification,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Regression => Task::Regression,
            TaskArg::Classification => Task::Classification,
        }
    }
}

/// Hypothesis class and learner settings shared by every command that fits.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = KernelKind::Rbf)]
    pub kernel: KernelKind,
    /// RBF bandwidth in `exp(-gamma·||x − x'||²)`; median heuristic on target inputs when omitted.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fit an unregularized intercept.
    #[arg(long)]
    pub intercept: bool,
    /// First-order optimality tolerance of the hinge solver.
    #[arg(long, default_value_t = 1e-6)]
    pub learner_tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub learner_max_iter: usize,
}

impl ModelArgs {
    pub fn kernel_spec(&self) -> Result<KernelSpec, String> {
        match (self.kernel, self.gamma) {
            (KernelKind::Linear, Some(_)) => Err("--gamma only applies to --kernel rbf".into()),
            (KernelKind::Linear, None) => Ok(KernelSpec::Linear),
            (KernelKind::Rbf, Some(g)) if !(g > 0.0 && g.is_finite()) => {
                Err(format!("--gamma must be positive, got {g}"))
            }
            (KernelKind::Rbf, gamma) => Ok(KernelSpec::Rbf { gamma }),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToyArgs {
    #[arg(value_enum)]
    pub kind: ToyKind,
    /// Comma-separated alpha values or `heuristic`
    /// [default: 0.1,0.5,1,10 for rotated-gaussians, 1 for regression-1d].
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<AlphaSetting>,
    /// Block coordinate descent iterations; all of them are run.
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Points per class (rotated-gaussians) or per domain (regression-1d)
    /// [default: 50 or 100].
    #[arg(long)]
    pub n: Option<usize>,
    /// Target rotation in radians (rotated-gaussians) [default: π/4].
    #[arg(long)]
    pub rotation: Option<f64>,
    /// Input shift of the target domain (regression-1d) [default: π].
    #[arg(long)]
    pub shift: Option<f64>,
    /// Label noise standard deviation (regression-1d) [default: 0.1].
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    #[arg(long, default_value = "exact")]
    pub ot: OtSolver,
    /// Also report the fraction of regression predictions within this distance of the truth.
    #[arg(long)]
    pub within: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory for report.json, series.csv, datasets and models;
    /// the report goes to stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Dataset and schema flags shared by `adapt` and `sweep`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Label column name(s); several give a vector-valued regression target.
    #[arg(long = "label-column", value_delimiter = ',', default_value = "label")]
    pub label_columns: Vec<String>,
    /// Feature column names; every non-label column when omitted.
    #[arg(long = "feature-columns", value_delimiter = ',')]
    pub feature_columns: Option<Vec<String>>,
    /// Number of classes; inferred from the source labels when omitted.
    #[arg(long)]
    pub n_classes: Option<usize>,
}

/// Block coordinate descent settings shared by `adapt` and `sweep`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// Relative objective change that stops the descent.
    #[arg(long, default_value_t = 1e-5)]
    pub rel_tol: f64,
    /// Run all iterations even after the objective has converged.
    #[arg(long)]
    pub full_iters: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the fraction of regression predictions within this distance of the truth.
    #[arg(long)]
    pub within: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AdaptArgs {
    /// Labeled source CSV, or a JSON dataset descriptor.
    #[arg(long)]
    pub source: PathBuf,
    /// Target CSV (labels optional, used for evaluation only), or a JSON descriptor.
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// `heuristic` (1 / max squared distance) or a positive value.
    #[arg(long, default_value = "heuristic")]
    pub alpha: AlphaSetting,
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    /// `exact` or `entropic:EPS`.
    #[arg(long, default_value = "exact")]
    pub ot: OtSolver,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output directory for report.json, model.json, baseline_model.json and
    /// trace.jsonl; the report goes to stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Labeled source CSV or JSON descriptor.
    #[arg(long, required_unless_present = "toy", conflicts_with = "toy")]
    pub source: Option<PathBuf>,
    /// Target CSV or JSON descriptor.
    #[arg(long, required_unless_present = "toy", conflicts_with = "toy")]
    pub target: Option<PathBuf>,
    /// Sweep on a generated toy instead of files (seeded by --seed).
    #[arg(long, value_enum)]
    pub toy: Option<ToyKind>,
    #[arg(long, value_enum, required_unless_present = "toy")]
    pub task: Option<TaskArg>,
    #[arg(long = "label-column", value_delimiter = ',', default_value = "label")]
    pub label_columns: Vec<String>,
    #[arg(long = "feature-columns", value_delimiter = ',')]
    pub feature_columns: Option<Vec<String>>,
    #[arg(long)]
    pub n_classes: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "heuristic")]
    pub alpha: Vec<AlphaSetting>,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    pub lambda: Vec<f64>,
    /// Comma-separated OT solvers, each `exact` or `entropic:EPS`.
    #[arg(long, value_delimiter = ',', default_value = "exact")]
    pub ot: Vec<OtSolver>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "JDOT_WORKERS")]
    pub workers: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Model JSON written by `adapt` or `toy`.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled CSV or JSON descriptor.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "label-column", value_delimiter = ',', default_value = "label")]
    pub label_columns: Vec<String>,
    #[arg(long = "feature-columns", value_delimiter = ',')]
    pub feature_columns: Option<Vec<String>>,
    #[arg(long)]
    pub within: Option<f64>,
}
