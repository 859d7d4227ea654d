//! Entropy-regularized OT by Sinkhorn iterations on dual potentials.
//!
//! The potentials `f`, `g` are updated with log-sum-exp reductions shifted by
//! their maximum, so `exp` never sees large positive arguments even when `ε`
//! is orders of magnitude below the cost scale.

use ndarray::{Array1, Array2};

use super::{CostMatrix, SolveStatus, TransportPlan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    /// Target for the largest marginal deviation.
    pub tol: f64,
}

impl EntropicOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }
}

impl Default for EntropicOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            max_iter: 10_000,
            tol: 1e-6,
        }
    }
}

/// Minimize `⟨γ, C⟩ + ε Σ γ log γ` over uniform-marginal couplings.
///
/// Row sums are exact after the final update; column sums are within
/// `opts.tol` when `status.converged` is set. A plan that ran out of
/// iterations is still returned, flagged as not converged and carrying the
/// achieved violation. `objective` is the unregularized transport cost.
pub fn solve_entropic(cost: &CostMatrix, opts: &EntropicOptions) -> Result<TransportPlan> {
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {}",
            opts.epsilon
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::invalid("entropic solver needs tol > 0 and max_iter >= 1"));
    }
    let c = cost.values();
    let (ns, nt) = c.dim();
    let eps = opts.epsilon;
    let log_a = -(ns as f64).ln();
    let log_b = -(nt as f64).ln();

    let mut f = Array1::<f64>::zeros(ns);
    let mut g = Array1::<f64>::zeros(nt);
    let mut scratch = vec![0.0; ns.max(nt)];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        // Column update makes column sums exact for the current f.
        for j in 0..nt {
            for i in 0..ns {
                scratch[i] = (f[i] - c[[i, j]]) / eps;
            }
            g[j] = eps * (log_b - log_sum_exp(&scratch[..ns]));
        }
        // Row update; afterwards rows are exact and columns carry the error.
        for i in 0..ns {
            for j in 0..nt {
                scratch[j] = (g[j] - c[[i, j]]) / eps;
            }
            f[i] = eps * (log_a - log_sum_exp(&scratch[..nt]));
        }
        if column_violation(&f, &g, c, eps) <= opts.tol {
            converged = true;
            break;
        }
    }

    let coupling = Array2::from_shape_fn((ns, nt), |(i, j)| ((f[i] + g[j] - c[[i, j]]) / eps).exp());
    let objective = super::frobenius_dot(coupling.view(), c);
    let (row_err, col_err) = super::marginal_violation(coupling.view());
    debug_assert!(row_err < 1e-9 || !converged);
    Ok(TransportPlan {
        coupling,
        objective,
        status: SolveStatus {
            converged,
            iterations,
            marginal_error: row_err.max(col_err),
        },
    })
}

fn column_violation(f: &Array1<f64>, g: &Array1<f64>, c: ndarray::ArrayView2<'_, f64>, eps: f64) -> f64 {
    let (ns, nt) = c.dim();
    let target = 1.0 / nt as f64;
    let mut worst: f64 = 0.0;
    for j in 0..nt {
        let s: f64 = (0..ns).map(|i| ((f[i] + g[j] - c[[i, j]]) / eps).exp()).sum();
        worst = worst.max((s - target).abs());
    }
    worst
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
