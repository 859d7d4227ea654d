//! Kernel ridge regression on transported targets.
//!
//! Minimizes `(1/N) Σ_j ||ŷ_j − f(x_j)||² + λ||f||²_H`. By the representer
//! theorem `f = Σ_j k(·, x_j) a_j (+ b)`, and stationarity reduces to
//! `(K + NλI) a = ŷ`, or with an unregularized intercept to the bordered
//! system `[K + NλI, 1; 1ᵀ, 0] [a; b] = [ŷ; 0]`.

use ndarray::{s, Array2, ArrayView2};

use super::{LearnerOptions, ModelTask, Predictor, TransportedTargets};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::{relative_residual, solve_lu, solve_spd};

const RESIDUAL_LIMIT: f64 = 1e-8;

pub fn fit_krr_weighted(
    x: ArrayView2<'_, f64>,
    targets: &TransportedTargets,
    kernel: Kernel,
    opts: &LearnerOptions,
) -> Result<Predictor> {
    opts.validate()?;
    kernel.validate()?;
    let y = &targets.0;
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "transported targets vs target inputs",
            expected: n,
            actual: y.nrows(),
        });
    }
    let m = y.ncols();
    let mut system = kernel.gram(x);
    let ridge = n as f64 * opts.lambda;
    for i in 0..n {
        system[[i, i]] += ridge;
    }

    let (coefficients, intercept) = if opts.fit_intercept {
        let mut bordered = Array2::zeros((n + 1, n + 1));
        bordered.slice_mut(s![..n, ..n]).assign(&system);
        bordered.slice_mut(s![..n, n]).fill(1.0);
        bordered.slice_mut(s![n, ..n]).fill(1.0);
        let mut rhs = Array2::zeros((n + 1, m));
        rhs.slice_mut(s![..n, ..]).assign(y);
        let sol = solve_lu(&bordered, &rhs)?;
        check_residual(&bordered, &sol, &rhs)?;
        (sol.slice(s![..n, ..]).to_owned(), sol.row(n).to_vec())
    } else {
        let sol = solve_spd(&system, y)?;
        check_residual(&system, &sol, y)?;
        (sol, vec![0.0; m])
    };

    Predictor::new(ModelTask::Regression, kernel, x.to_owned(), coefficients, intercept)
}

fn check_residual(a: &Array2<f64>, x: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    let r = relative_residual(a, x, b);
    if r > RESIDUAL_LIMIT || !r.is_finite() {
        return Err(Error::IllConditioned {
            // residual/epsilon is a crude lower bound on the condition number
            condition_estimate: r / f64::EPSILON,
        });
    }
    Ok(())
}

/// `(1/N) Σ_j ||ŷ_j − f(x_j)||² + λ Σ_m a_mᵀ K a_m`.
pub fn krr_objective(
    model: &Predictor,
    x: ArrayView2<'_, f64>,
    targets: &TransportedTargets,
    lambda: f64,
) -> Result<f64> {
    let f = model.scores(x)?;
    let n = x.nrows() as f64;
    let fit: f64 = (&f - &targets.0).iter().map(|v| v * v).sum::<f64>() / n;
    Ok(fit + lambda * model.rkhs_norm_sq())
}

/// `||(K + NλI)a + b − ŷ|| / ||ŷ||` for a model fit on its own support points.
pub fn krr_stationarity_residual(model: &Predictor, targets: &TransportedTargets, lambda: f64) -> f64 {
    let x = model.support_points.view();
    let n = x.nrows();
    let mut system = model.kernel.gram(x);
    for i in 0..n {
        system[[i, i]] += n as f64 * lambda;
    }
    let shifted = &targets.0 - &ndarray::Array1::from(model.intercept.clone());
    relative_residual(&system, &model.coefficients, &shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts(lambda: f64) -> LearnerOptions {
        LearnerOptions {
            lambda,
            ..LearnerOptions::default()
        }
    }

    #[test]
    fn scalar_linear_case() {
        let x = array![[1.0]];
        let t = TransportedTargets(array![[2.0]]);
        let p = fit_krr_weighted(x.view(), &t, Kernel::Linear, &opts(1.0)).unwrap();
        assert!((p.coefficients[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((p.scores(x.view()).unwrap()[[0, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heavy_regularization_shrinks_to_zero() {
        let x = array![[0.0], [1.0], [2.0]];
        let t = TransportedTargets(array![[1.0], [3.0], [-2.0]]);
        let p = fit_krr_weighted(x.view(), &t, Kernel::Rbf { gamma: 1.0 }, &opts(1e9)).unwrap();
        assert!(p.coefficients.iter().all(|a| a.abs() < 1e-8));
        assert!(p.scores(x.view()).unwrap().iter().all(|f| f.abs() < 1e-8));
    }

    #[test]
    fn stationarity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((12, 3), |_| rng.random_range(-2.0..2.0));
        let t = TransportedTargets(Array2::from_shape_fn((12, 2), |_| rng.random_range(-1.0..1.0)));
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.3 }] {
            let p = fit_krr_weighted(x.view(), &t, kernel, &opts(1e-3)).unwrap();
            assert!(krr_stationarity_residual(&p, &t, 1e-3) < 1e-8);
        }
    }

    #[test]
    fn intercept_absorbs_constant_offset() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let t = TransportedTargets(array![[5.0], [5.0], [5.0], [5.0]]);
        let o = LearnerOptions {
            lambda: 1.0,
            fit_intercept: true,
            ..LearnerOptions::default()
        };
        let p = fit_krr_weighted(x.view(), &t, Kernel::Rbf { gamma: 1.0 }, &o).unwrap();
        assert!((p.intercept[0] - 5.0).abs() < 1e-10);
        assert!(p.coefficients.iter().all(|a| a.abs() < 1e-10));
        assert!(krr_stationarity_residual(&p, &t, 1.0) < 1e-10);
    }

    #[test]
    fn objective_is_minimal_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((8, 1), |_| rng.random_range(-3.0..3.0));
        let t = TransportedTargets(x.mapv(f64::sin));
        let lambda = 1e-2;
        let p = fit_krr_weighted(x.view(), &t, Kernel::Rbf { gamma: 0.5 }, &opts(lambda)).unwrap();
        let best = krr_objective(&p, x.view(), &t, lambda).unwrap();
        for _ in 0..1000 {
            let dir: Array1<f64> = Array1::from_shape_fn(8, |_| rng.random_range(-1.0..1.0));
            let dir = &dir / dir.dot(&dir).sqrt() * 1e-2;
            let mut q = p.clone();
            q.coefficients.column_mut(0).scaled_add(1.0, &dir);
            assert!(krr_objective(&q, x.view(), &t, lambda).unwrap() >= best);
        }
    }

    #[test]
    fn rejects_bad_lambda_and_shapes() {
        let x = array![[1.0]];
        let t = TransportedTargets(array![[1.0], [2.0]]);
        assert!(fit_krr_weighted(x.view(), &t, Kernel::Linear, &opts(1.0)).is_err());
        let t = TransportedTargets(array![[1.0]]);
        assert!(fit_krr_weighted(x.view(), &t, Kernel::Linear, &opts(0.0)).is_err());
    }
}
