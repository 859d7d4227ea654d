//! Dense solves backed by nalgebra, with ndarray in and out.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Relative residual `||A·X − B||_F / ||B||_F` (0 when `B` is zero and the residual is too).
pub(crate) fn relative_residual(a: &Array2<f64>, x: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let r = a.dot(x) - b;
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bn == 0.0 {
        rn
    } else {
        rn / bn
    }
}

/// Solve a symmetric positive definite system by Cholesky, with one round of
/// iterative refinement when the first residual is above `1e-12`.
pub(crate) fn solve_spd(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let chol = to_na(a).cholesky().ok_or(Error::IllConditioned {
        condition_estimate: f64::INFINITY,
    })?;
    let l = chol.l_dirty();
    let (lo, hi) = (0..l.nrows()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let d = l[(i, i)].abs();
        (lo.min(d), hi.max(d))
    });
    let condition_estimate = (hi / lo).powi(2);
    if !condition_estimate.is_finite() || condition_estimate > 1e15 {
        return Err(Error::IllConditioned { condition_estimate });
    }
    let b_na = to_na(b);
    let mut x = chol.solve(&b_na);
    let mut sol = from_na(&x);
    if relative_residual(a, &sol, b) > 1e-12 {
        let r = &b_na - to_na(a) * &x;
        x += chol.solve(&r);
        sol = from_na(&x);
    }
    Ok(sol)
}

/// Solve a general square system by LU with partial pivoting.
pub(crate) fn solve_lu(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let lu = to_na(a).lu();
    let x = lu.solve(&to_na(b)).ok_or(Error::IllConditioned {
        condition_estimate: f64::INFINITY,
    })?;
    let sol = from_na(&x);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned {
            condition_estimate: f64::INFINITY,
        });
    }
    Ok(sol)
}
