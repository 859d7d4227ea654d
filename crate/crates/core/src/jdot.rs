//! Block coordinate descent for the JDOT objective
//!
//! ```text
//! min_{f, γ}  Σ_ij γ_ij (α·d(x_i^s, x_j^t) + L(y_i^s, f(x_j^t))) + λ·Ω(f)
//! ```
//!
//! `f⁰` is fit on the labeled source samples. Each iteration then solves the
//! OT problem for the cost induced by the current `f`, and refits `f` on the
//! target inputs with the plan held fixed. The objective is recorded after
//! every half-step.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cost::JointCostConfig;
use crate::cost::{assemble_joint_cost, feature_distance_matrix, heuristic_alpha, label_loss_matrix, LabelLoss};
use crate::data::{LabeledDataset, Labels, Task};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelSpec};
use crate::learners::{
    fit_hinge_ova, fit_krr_weighted, krr_objective, transported_proportions, transported_targets, LearnerOptions,
    Predictor, TransportedProportions, TransportedTargets,
};
use crate::ot::{marginal_violation, solve_entropic, solve_exact, EntropicOptions, TransportPlan};

/// `α` given explicitly or as `1 / max_ij d(x_i^s, x_j^t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSetting {
    Heuristic,
    Value(f64),
}

impl Serialize for AlphaSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaSetting::Heuristic => s.serialize_str("heuristic"),
            AlphaSetting::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(AlphaSetting::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for AlphaSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("heuristic") {
            return Ok(AlphaSetting::Heuristic);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(AlphaSetting::Value(v)),
            _ => Err(format!("alpha must be 'heuristic' or a positive number, got '{s}'")),
        }
    }
}

impl std::fmt::Display for AlphaSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlphaSetting::Heuristic => f.write_str("heuristic"),
            AlphaSetting::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OtSolver {
    Exact,
    Entropic(EntropicOptions),
}

impl Serialize for OtSolver {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::fmt::Display for OtSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OtSolver::Exact => f.write_str("exact"),
            OtSolver::Entropic(o) => write!(f, "entropic:{}", o.epsilon),
        }
    }
}

impl std::str::FromStr for OtSolver {
    type Err = String;

    /// `exact` or `entropic:EPS`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "exact" {
            return Ok(OtSolver::Exact);
        }
        if let Some(eps) = s.strip_prefix("entropic:") {
            return match eps.parse::<f64>() {
                Ok(e) if e > 0.0 && e.is_finite() => Ok(OtSolver::Entropic(EntropicOptions::new(e))),
                _ => Err(format!("invalid entropic epsilon '{eps}'")),
            };
        }
        Err(format!("ot solver must be 'exact' or 'entropic:EPS', got '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JdotConfig {
    pub task: Task,
    pub alpha: AlphaSetting,
    /// Weight of the squared RKHS norm.
    pub lambda: f64,
    pub max_iter: usize,
    /// Relative objective change between iterations that counts as converged.
    pub rel_tol: f64,
    /// Stop as soon as `rel_tol` is met; otherwise run all `max_iter` iterations.
    pub early_stop: bool,
    pub ot: OtSolver,
    pub kernel: KernelSpec,
    pub fit_intercept: bool,
    pub learner_tol: f64,
    pub learner_max_iter: usize,
    pub seed: u64,
}

impl JdotConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            alpha: AlphaSetting::Heuristic,
            lambda: 1e-2,
            max_iter: 10,
            rel_tol: 1e-5,
            early_stop: true,
            ot: OtSolver::Exact,
            kernel: KernelSpec::default(),
            fit_intercept: false,
            learner_tol: 1e-6,
            learner_max_iter: 5000,
            seed: 0,
        }
    }

    pub fn learner_options(&self) -> LearnerOptions {
        LearnerOptions {
            lambda: self.lambda,
            fit_intercept: self.fit_intercept,
            tol: self.learner_tol,
            max_iter: self.learner_max_iter,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        if let AlphaSetting::Value(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::invalid(format!("alpha must be positive, got {a}")));
            }
        }
        self.learner_options().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Coupling re-solved with `f` fixed.
    Transport,
    /// `f` refit with the coupling fixed.
    Learner,
}

/// One record of the trace, written after each half-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfStep {
    pub iter: usize,
    pub phase: Phase,
    /// Full objective `⟨γ, αD + L(f)⟩ + λΩ(f)` at the current `(γ, f)`.
    pub objective: f64,
    /// `⟨γ, C⟩` reported by the OT solve (transport steps only).
    pub ot_objective: Option<f64>,
    /// The learner's own objective at the fitted model (learner steps only).
    pub learner_objective: Option<f64>,
    /// Largest marginal deviation of the current plan.
    pub marginal_violation: f64,
    /// Whether the step's inner solver met its tolerance.
    pub solver_converged: bool,
}

#[derive(Debug, Clone)]
pub struct JdotTrace {
    pub alpha: f64,
    pub kernel: Kernel,
    pub steps: Vec<HalfStep>,
    /// `f⁰`, fit on the source samples only.
    pub initial_model: Predictor,
    pub final_model: Predictor,
    pub final_plan: TransportPlan,
    pub iterations: usize,
    /// First iteration whose relative objective change fell below `rel_tol`.
    pub converged_at: Option<usize>,
}

impl JdotTrace {
    /// One JSON object per half-step, newline separated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.objective).collect()
    }
}

/// Model state handed to observers after each iteration.
pub struct IterationView<'a> {
    /// 0 for the source-only model, then 1, 2, ...
    pub iter: usize,
    pub plan: Option<&'a TransportPlan>,
    pub model: &'a Predictor,
}

pub fn jdot_fit(source: &LabeledDataset, target_x: ArrayView2<'_, f64>, cfg: &JdotConfig) -> Result<JdotTrace> {
    jdot_fit_observed(source, target_x, cfg, |_| {})
}

pub fn jdot_fit_observed(
    source: &LabeledDataset,
    target_x: ArrayView2<'_, f64>,
    cfg: &JdotConfig,
    mut observe: impl FnMut(&IterationView<'_>),
) -> Result<JdotTrace> {
    cfg.validate()?;
    let labels = source.require_labels()?;
    if labels.task() != cfg.task {
        return Err(Error::Schema(format!(
            "configured task {:?} but source labels are {:?}",
            cfg.task,
            labels.task()
        )));
    }
    if target_x.nrows() == 0 {
        return Err(Error::invalid("no target samples"));
    }
    crate::data::check_finite(target_x, "target features")?;
    let dist = feature_distance_matrix(source.x(), target_x)?;
    let alpha = match cfg.alpha {
        AlphaSetting::Heuristic => heuristic_alpha(dist.view())?,
        AlphaSetting::Value(v) => v,
    };
    let kernel = cfg.kernel.resolve(target_x)?;
    let learner = cfg.learner_options();
    let cost_cfg = JointCostConfig::new(alpha, loss_for(labels))?;

    let initial_model = fit_source_only(source, kernel, &learner)?.0;
    observe(&IterationView {
        iter: 0,
        plan: None,
        model: &initial_model,
    });

    let mut model = initial_model.clone();
    let mut steps = Vec::new();
    let mut plan: Option<TransportPlan> = None;
    let mut previous: Option<f64> = None;
    let mut converged_at = None;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iter {
        iterations = iter;
        let preds = model.scores(target_x)?;
        let cost = assemble_joint_cost(dist.view(), labels, preds.view(), &cost_cfg)?;
        let gamma = match cfg.ot {
            OtSolver::Exact => solve_exact(&cost)?,
            OtSolver::Entropic(opts) => solve_entropic(&cost, &opts)?,
        };
        let violation = plan_violation(&gamma);
        steps.push(HalfStep {
            iter,
            phase: Phase::Transport,
            objective: jdot_objective(
                gamma.coupling.view(),
                dist.view(),
                labels,
                &model,
                target_x,
                alpha,
                cfg.lambda,
            )?,
            ot_objective: Some(gamma.objective),
            learner_objective: None,
            marginal_violation: violation,
            solver_converged: gamma.status.converged,
        });

        let (fitted, learner_objective, learner_converged) = fit_on_plan(&gamma, labels, target_x, kernel, &learner)?;
        model = fitted;
        let objective = jdot_objective(
            gamma.coupling.view(),
            dist.view(),
            labels,
            &model,
            target_x,
            alpha,
            cfg.lambda,
        )?;
        steps.push(HalfStep {
            iter,
            phase: Phase::Learner,
            objective,
            ot_objective: None,
            learner_objective: Some(learner_objective),
            marginal_violation: violation,
            solver_converged: learner_converged,
        });
        observe(&IterationView {
            iter,
            plan: Some(&gamma),
            model: &model,
        });
        plan = Some(gamma);

        if let Some(prev) = previous {
            let change = (objective - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if change < cfg.rel_tol && converged_at.is_none() {
                converged_at = Some(iter);
                if cfg.early_stop {
                    break;
                }
            }
        }
        previous = Some(objective);
    }

    Ok(JdotTrace {
        alpha,
        kernel,
        steps,
        initial_model,
        final_model: model,
        final_plan: plan.expect("max_iter >= 1"),
        iterations,
        converged_at,
    })
}

fn loss_for(labels: &Labels) -> LabelLoss {
    match labels {
        Labels::Classes { .. } => LabelLoss::SquaredHingeOva,
        Labels::Values(_) => LabelLoss::Squared,
    }
}

fn plan_violation(plan: &TransportPlan) -> f64 {
    let (r, c) = marginal_violation(plan.coupling.view());
    r.max(c)
}

/// The source-only model: the same learner fit on `(X_s, Y_s)` with the
/// identity coupling. Returns the model and whether its solver converged.
pub fn fit_source_only(source: &LabeledDataset, kernel: Kernel, learner: &LearnerOptions) -> Result<(Predictor, bool)> {
    let labels = source.require_labels()?;
    match labels {
        Labels::Values(y) => {
            let model = fit_krr_weighted(source.x(), &TransportedTargets(y.clone()), kernel, learner)?;
            Ok((model, true))
        }
        Labels::Classes { .. } => {
            let fit = fit_hinge_ova(source.x(), &TransportedProportions(labels.to_matrix()), kernel, learner)?;
            Ok((fit.predictor, fit.converged))
        }
    }
}

fn fit_on_plan(
    plan: &TransportPlan,
    labels: &Labels,
    target_x: ArrayView2<'_, f64>,
    kernel: Kernel,
    learner: &LearnerOptions,
) -> Result<(Predictor, f64, bool)> {
    match labels {
        Labels::Values(y) => {
            let targets = transported_targets(plan.coupling.view(), y.view())?;
            let model = fit_krr_weighted(target_x, &targets, kernel, learner)?;
            let obj = krr_objective(&model, target_x, &targets, learner.lambda)?;
            Ok((model, obj, true))
        }
        Labels::Classes { indices, n_classes } => {
            let props = transported_proportions(plan.coupling.view(), indices, *n_classes)?;
            let fit = fit_hinge_ova(target_x, &props, kernel, learner)?;
            Ok((fit.predictor, fit.objective, fit.converged))
        }
    }
}

/// `Σ_ij γ_ij (α·D_ij + L(y_i^s, f(x_j^t))) + λ·Ω(f)`.
pub fn jdot_objective(
    coupling: ArrayView2<'_, f64>,
    dist: ArrayView2<'_, f64>,
    labels: &Labels,
    model: &Predictor,
    target_x: ArrayView2<'_, f64>,
    alpha: f64,
    lambda: f64,
) -> Result<f64> {
    if coupling.dim() != dist.dim() {
        return Err(Error::invalid(format!(
            "coupling {:?} and distance {:?} shapes differ",
            coupling.dim(),
            dist.dim()
        )));
    }
    let preds = model.scores(target_x)?;
    let loss: Array2<f64> = label_loss_matrix(labels, preds.view(), loss_for(labels))?;
    let transport: f64 = coupling
        .iter()
        .zip(dist.iter().zip(loss.iter()))
        .map(|(g, (d, l))| g * (alpha * d + l))
        .sum();
    Ok(transport + lambda * model.rkhs_norm_sq())
}
