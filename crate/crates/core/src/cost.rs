//! Joint feature/label ground cost `C_ij = α·d(x_i^s, x_j^t) + L(y_i^s, f(x_j^t))`.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::error::{Error, Result};
use crate::kernel::squared_distance;
use crate::ot::CostMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMetric {
    #[default]
    SquaredEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelLoss {
    /// `||y − f||²`.
    Squared,
    /// `Σ_k max(0, 1 − s_k·f_k)²` with `s_k = +1` for the true class, `−1` otherwise.
    SquaredHingeOva,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointCostConfig {
    pub alpha: f64,
    pub metric: FeatureMetric,
    pub loss: LabelLoss,
}

impl JointCostConfig {
    pub fn new(alpha: f64, loss: LabelLoss) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            metric: FeatureMetric::SquaredEuclidean,
            loss,
        })
    }
}

/// `D[i, j] = ||x_i^s − x_j^t||²`, rows computed in parallel.
///
/// Each entry is summed over features in index order, so the result does not
/// depend on the thread schedule.
pub fn feature_distance_matrix(xs: ArrayView2<'_, f64>, xt: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if xs.ncols() != xt.ncols() {
        return Err(Error::DimensionMismatch {
            context: "source vs target feature dimension",
            expected: xs.ncols(),
            actual: xt.ncols(),
        });
    }
    let mut dist = Array2::zeros((xs.nrows(), xt.nrows()));
    Zip::from(dist.axis_iter_mut(Axis(0)))
        .and(xs.axis_iter(Axis(0)))
        .par_for_each(|mut row, a| {
            for (j, b) in xt.axis_iter(Axis(0)).enumerate() {
                row[j] = squared_distance(a, b);
            }
        });
    Ok(dist)
}

/// `α = 1 / max_ij D[i, j]`.
pub fn heuristic_alpha(dist: ArrayView2<'_, f64>) -> Result<f64> {
    let max = dist.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && max.is_finite() {
        Ok(1.0 / max)
    } else {
        Err(Error::UndefinedAlpha)
    }
}

#[inline]
pub fn squared_hinge(y: f64, f: f64) -> f64 {
    let m = (1.0 - y * f).max(0.0);
    m * m
}

/// `L[i, j] = L(y_i^s, f(x_j^t))` for predictions `preds` (`N_t × m`).
pub fn label_loss_matrix(labels: &Labels, preds: ArrayView2<'_, f64>, loss: LabelLoss) -> Result<Array2<f64>> {
    crate::data::check_finite(preds, "predictions")?;
    let nt = preds.nrows();
    match (labels, loss) {
        (Labels::Values(y), LabelLoss::Squared) => {
            if y.ncols() != preds.ncols() {
                return Err(Error::DimensionMismatch {
                    context: "label vs prediction dimension",
                    expected: y.ncols(),
                    actual: preds.ncols(),
                });
            }
            Ok(Array2::from_shape_fn((y.nrows(), nt), |(i, j)| {
                squared_distance(y.row(i), preds.row(j))
            }))
        }
        (Labels::Classes { indices, n_classes }, LabelLoss::SquaredHingeOva) => {
            if preds.ncols() != *n_classes {
                return Err(Error::DimensionMismatch {
                    context: "class count vs score columns",
                    expected: *n_classes,
                    actual: preds.ncols(),
                });
            }
            Ok(Array2::from_shape_fn((indices.len(), nt), |(i, j)| {
                preds
                    .row(j)
                    .iter()
                    .enumerate()
                    .map(|(k, &f)| squared_hinge(if k == indices[i] { 1.0 } else { -1.0 }, f))
                    .sum()
            }))
        }
        _ => Err(Error::invalid(format!(
            "label loss {loss:?} does not apply to {:?} labels",
            labels.task()
        ))),
    }
}

/// Assemble `C = α·D + L` and validate it as a transport cost.
pub fn assemble_joint_cost(
    dist: ArrayView2<'_, f64>,
    labels: &Labels,
    preds: ArrayView2<'_, f64>,
    cfg: &JointCostConfig,
) -> Result<CostMatrix> {
    if labels.len() != dist.nrows() || preds.nrows() != dist.ncols() {
        return Err(Error::invalid(format!(
            "cost shapes disagree: dist {:?}, {} labels, {} predictions",
            dist.dim(),
            labels.len(),
            preds.nrows()
        )));
    }
    let mut c = label_loss_matrix(labels, preds, cfg.loss)?;
    c.scaled_add(cfg.alpha, &dist);
    CostMatrix::new(c)
}
