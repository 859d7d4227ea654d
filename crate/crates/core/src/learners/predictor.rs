use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTask {
    Regression,
    /// One-vs-all: one score column per class, prediction by argmax.
    ClassificationOva,
}

/// Kernel expansion `f(x) = Σ_j k(x, s_j)·a_j + b` over support points `s_j`.
///
/// JSON layout (field order is stable):
///
/// ```json
/// {
///   "task": "regression" | "classification-ova",
///   "kernel": {"kind": "linear"} | {"kind": "rbf", "gamma": 0.5},
///   "support_points": [[x11, x12, ...], ...],   // n_support rows of d features
///   "coefficients": [[a11, ...], ...],          // n_support rows of m outputs
///   "intercept": [b1, ..., bm]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub task: ModelTask,
    pub kernel: Kernel,
    #[serde(with = "rows")]
    pub support_points: Array2<f64>,
    #[serde(with = "rows")]
    pub coefficients: Array2<f64>,
    pub intercept: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Values(Array2<f64>),
    Classes(Vec<usize>),
}

impl Predictor {
    pub fn new(
        task: ModelTask,
        kernel: Kernel,
        support_points: Array2<f64>,
        coefficients: Array2<f64>,
        intercept: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            task,
            kernel,
            support_points,
            coefficients,
            intercept,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.support_points.nrows() != self.coefficients.nrows() {
            return Err(Error::DimensionMismatch {
                context: "support points vs coefficient rows",
                expected: self.support_points.nrows(),
                actual: self.coefficients.nrows(),
            });
        }
        if self.intercept.len() != self.coefficients.ncols() {
            return Err(Error::DimensionMismatch {
                context: "intercept vs outputs",
                expected: self.coefficients.ncols(),
                actual: self.intercept.len(),
            });
        }
        if self.coefficients.ncols() == 0 || self.support_points.ncols() == 0 {
            return Err(Error::invalid("predictor needs at least one output and one feature"));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.support_points.ncols()
    }

    /// Raw outputs `n × m`: regression values or per-class scores.
    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                context: "predict feature dimension",
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        let k = self.kernel.cross(x, self.support_points.view());
        Ok(k.dot(&self.coefficients) + &Array1::from(self.intercept.clone()))
    }

    /// Argmax of the class scores; the lowest class index wins ties.
    pub fn predict_classes(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.scores(x)?.view()))
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Prediction> {
        match self.task {
            ModelTask::Regression => Ok(Prediction::Values(self.scores(x)?)),
            ModelTask::ClassificationOva => Ok(Prediction::Classes(self.predict_classes(x)?)),
        }
    }

    /// `Σ_m a_mᵀ K a_m` with `K` the Gram matrix of the support points.
    pub fn rkhs_norm_sq(&self) -> f64 {
        let gram = self.kernel.gram(self.support_points.view());
        rkhs_norm_sq_with(&gram, self.coefficients.view())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Predictor = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

pub(crate) fn rkhs_norm_sq_with(gram: &Array2<f64>, coef: ArrayView2<'_, f64>) -> f64 {
    let ka = gram.dot(&coef);
    ka.iter().zip(coef.iter()).map(|(u, v)| u * v).sum()
}

pub(crate) fn argmax_rows(scores: ArrayView2<'_, f64>) -> Vec<usize> {
    scores
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

mod rows {
    use ndarray::Array2;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        let nrows = rows.len();
        Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect()).map_err(D::Error::custom)
    }
}
