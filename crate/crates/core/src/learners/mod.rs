//! Kernel hypothesis classes and the fixed-coupling learning step.
//!
//! With the coupling `γ` fixed, the data term `Σ_ij γ_ij L(y_i^s, f(x_j^t))`
//! collapses to one term per target sample:
//!
//! * squared loss: `(1/N_t) Σ_j ||ŷ_j − f(x_j^t)||²` up to a constant, with
//!   transported targets `ŷ_j = N_t Σ_i γ_ij y_i^s`;
//! * one-vs-all squared hinge: `(1/N_t) Σ_jk P̂_jk L(1, f_k) + (1 − P̂_jk) L(−1, f_k)`
//!   with transported class proportions `P̂ = N_t γᵀ P^s`.
//!
//! Both scalings use `N_t` so that `ŷ_j` is a weighted average of source labels
//! and every row of `P̂` sums to one.

mod hinge;
mod krr;
mod predictor;

pub use hinge::{fit_hinge_ova, hinge_objective, hinge_objective_and_gradient, HingeFit};
pub use krr::{fit_krr_weighted, krr_objective, krr_stationarity_residual};
pub use predictor::{ModelTask, Prediction, Predictor};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Regularization and solver settings shared by the learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerOptions {
    /// Weight of the squared RKHS norm.
    pub lambda: f64,
    /// Fit an unregularized per-output intercept.
    pub fit_intercept: bool,
    /// First-order optimality tolerance for iterative fits.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            fit_intercept: false,
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

impl LearnerOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(Error::invalid("learner needs tol > 0 and max_iter >= 1"));
        }
        Ok(())
    }
}

/// Per-target weighted averages of source labels, `N_t × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedTargets(pub Array2<f64>);

/// Per-target class distributions, `N_t × K`, rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedProportions(pub Array2<f64>);

/// `ŷ_j = Σ_i γ_ij y_i^s / Σ_i γ_ij`.
///
/// For a plan with exact column sums `1/N_t` this is `N_t Σ_i γ_ij y_i^s`;
/// normalizing by the actual column mass projects away the marginal error
/// left by an entropic solve.
pub fn transported_targets(coupling: ArrayView2<'_, f64>, ys: ArrayView2<'_, f64>) -> Result<TransportedTargets> {
    Ok(TransportedTargets(column_weighted_average(coupling, ys)?))
}

/// `P̂ = N_t γᵀ P^s` with `P^s` the one-hot source class matrix.
pub fn transported_proportions(
    coupling: ArrayView2<'_, f64>,
    classes: &[usize],
    n_classes: usize,
) -> Result<TransportedProportions> {
    if let Some(&k) = classes.iter().find(|&&k| k >= n_classes) {
        return Err(Error::invalid(format!(
            "class {k} out of range for {n_classes} classes"
        )));
    }
    let mut one_hot = Array2::zeros((classes.len(), n_classes));
    for (i, &k) in classes.iter().enumerate() {
        one_hot[[i, k]] = 1.0;
    }
    Ok(TransportedProportions(column_weighted_average(
        coupling,
        one_hot.view(),
    )?))
}

fn column_weighted_average(coupling: ArrayView2<'_, f64>, values: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if coupling.nrows() != values.nrows() {
        return Err(Error::DimensionMismatch {
            context: "coupling rows vs source samples",
            expected: coupling.nrows(),
            actual: values.nrows(),
        });
    }
    let mut out = coupling.t().dot(&values);
    for (j, mut row) in out.rows_mut().into_iter().enumerate() {
        let mass: f64 = coupling.column(j).sum();
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::invalid(format!("target {j} receives no mass")));
        }
        row /= mass;
    }
    Ok(out)
}
