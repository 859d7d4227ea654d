//! Discrete optimal transport between two uniform empirical measures.
//!
//! Both solvers work on a dense [`CostMatrix`] and return a [`TransportPlan`]
//! whose marginals are `1/N_s` on every row and `1/N_t` on every column.

mod entropic;
mod exact;

pub use entropic::{solve_entropic, EntropicOptions};
pub use exact::solve_exact;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `N_s × N_t` matrix of non-negative, finite transport costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
}

impl CostMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (ns, nt) = values.dim();
        if ns == 0 || nt == 0 {
            return Err(Error::invalid(format!("cost matrix must be non-empty, got {ns}x{nt}")));
        }
        for ((i, j), &c) in values.indexed_iter() {
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    what: "cost matrix",
                    row: i,
                    col: j,
                });
            }
            if c < 0.0 {
                return Err(Error::invalid(format!("negative cost {c} at ({i}, {j})")));
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let nt = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != nt) {
            return Err(Error::invalid("ragged cost rows"));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let values = Array2::from_shape_vec((rows.len(), nt), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(values)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn n_source(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_target(&self) -> usize {
        self.values.ncols()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

/// How a plan was obtained and how well it meets its marginal constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute deviation of a row or column sum from its target.
    pub marginal_error: f64,
}

/// A coupling between uniform marginals together with its transport cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    /// `Σ_ij coupling_ij · C_ij` for the cost the plan was solved on.
    pub objective: f64,
    pub status: SolveStatus,
}

impl TransportPlan {
    pub fn n_source(&self) -> usize {
        self.coupling.nrows()
    }

    pub fn n_target(&self) -> usize {
        self.coupling.ncols()
    }

    /// `Σ_ij γ_ij · C_ij` against an arbitrary cost of matching shape.
    pub fn cost_against(&self, cost: ArrayView2<'_, f64>) -> f64 {
        frobenius_dot(self.coupling.view(), cost)
    }
}

/// Max absolute deviation of row sums from `1/N_s` and column sums from `1/N_t`.
pub fn marginal_violation(coupling: ArrayView2<'_, f64>) -> (f64, f64) {
    let (ns, nt) = coupling.dim();
    let row_target = 1.0 / ns as f64;
    let col_target = 1.0 / nt as f64;
    let row_err = coupling
        .sum_axis(Axis(1))
        .iter()
        .map(|s| (s - row_target).abs())
        .fold(0.0, f64::max);
    let col_err = coupling
        .sum_axis(Axis(0))
        .iter()
        .map(|s| (s - col_target).abs())
        .fold(0.0, f64::max);
    (row_err, col_err)
}

pub(crate) fn frobenius_dot(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_non_finite_and_negative() {
        assert!(matches!(
            CostMatrix::new(array![[0.0, f64::NAN]]),
            Err(Error::NonFinite { row: 0, col: 1, .. })
        ));
        assert!(CostMatrix::new(array![[f64::INFINITY]]).is_err());
        assert!(CostMatrix::new(array![[-1.0]]).is_err());
        assert!(CostMatrix::new(Array2::zeros((0, 3))).is_err());
    }

    #[test]
    fn violation_of_product_coupling_is_zero() {
        let g = Array2::from_elem((3, 4), 1.0 / 12.0);
        let (r, c) = marginal_violation(g.view());
        assert!(r < 1e-15 && c < 1e-15);
    }

    #[test]
    fn violation_of_zero_grid() {
        let g = Array2::<f64>::zeros((4, 5));
        let (r, c) = marginal_violation(g.view());
        assert_eq!(r, 0.25);
        assert_eq!(c, 0.2);
    }
}
