//! Positive definite kernels on feature vectors.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k(x, x') = ⟨x, x'⟩` or `exp(−gamma·||x − x'||²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }

    /// `K[i, j] = k(a_i, b_j)`.
    pub fn cross(&self, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
        Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| self.eval(a.row(i), b.row(j)))
    }

    /// Symmetric Gram matrix on `x`; computed on the upper triangle and mirrored.
    pub fn gram(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let n = x.nrows();
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = if i == j && matches!(self, Kernel::Rbf { .. }) {
                    1.0
                } else {
                    self.eval(x.row(i), x.row(j))
                };
                k[[i, j]] = v;
                k[[j, i]] = v;
            }
        }
        k
    }
}

/// A kernel whose RBF bandwidth may still have to be picked from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    Linear,
    /// `gamma: None` selects the median heuristic on the inputs given to [`KernelSpec::resolve`].
    Rbf {
        gamma: Option<f64>,
    },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Rbf { gamma: None }
    }
}

impl KernelSpec {
    pub fn resolve(&self, x: ArrayView2<'_, f64>) -> Result<Kernel> {
        let k = match *self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Rbf { gamma: Some(gamma) } => Kernel::Rbf { gamma },
            KernelSpec::Rbf { gamma: None } => Kernel::Rbf {
                gamma: median_heuristic_gamma(x),
            },
        };
        k.validate()?;
        Ok(k)
    }
}

pub(crate) fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `1 / (2·median_{i<j} ||x_i − x_j||²)`; falls back to 1 when fewer than two
/// distinct points make the median zero.
pub fn median_heuristic_gamma(x: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows();
    let mut d: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(squared_distance(x.row(i), x.row(j)));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    };
    if median > 0.0 {
        1.0 / (2.0 * median)
    } else {
        1.0
    }
}
