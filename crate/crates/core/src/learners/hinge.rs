//! One-vs-all kernel classifiers with the squared hinge loss, trained on
//! transported class proportions.
//!
//! For each class `k` the objective is
//!
//! ```text
//! J_k(a, b) = (1/N) Σ_j [ P̂_jk (1 − f_j)_+² + (1 − P̂_jk) (1 + f_j)_+² ] + λ aᵀKa,
//! f = K a + b,
//! ```
//!
//! and the full objective is `Σ_k J_k`. The data term is a piecewise quadratic
//! and continuously differentiable in `f`, so each class is solved by a
//! generalized Newton iteration: freeze the set of active hinge terms, jump to
//! the minimizer of the resulting quadratic, and backtrack (Armijo) on the true
//! objective. Iteration stops on first-order optimality,
//! `||∇J|| ≤ tol·(1 + |J|)`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use super::{LearnerOptions, ModelTask, Predictor, TransportedProportions};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::solve_lu;

const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct HingeFit {
    pub predictor: Predictor,
    pub objective: f64,
    /// Euclidean norm of the gradient over all coefficients and intercepts.
    pub gradient_norm: f64,
    /// Largest number of Newton steps taken by any class.
    pub iterations: usize,
    pub converged: bool,
}

pub fn fit_hinge_ova(
    x: ArrayView2<'_, f64>,
    props: &TransportedProportions,
    kernel: Kernel,
    opts: &LearnerOptions,
) -> Result<HingeFit> {
    opts.validate()?;
    kernel.validate()?;
    let p = &props.0;
    let n = x.nrows();
    if p.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "class proportions vs target inputs",
            expected: n,
            actual: p.nrows(),
        });
    }
    if p.ncols() == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    crate::data::check_finite(p.view(), "class proportions")?;
    let n_classes = p.ncols();
    let gram = kernel.gram(x);
    // Per-class share of the global tolerance, so the combined gradient meets it too.
    let class_tol = opts.tol / (n_classes as f64).sqrt();

    let per_class: Vec<ClassFit> = (0..n_classes)
        .into_par_iter()
        .map(|k| fit_one_class(&gram, p.column(k), opts, class_tol))
        .collect::<Result<_>>()?;

    let mut coefficients = Array2::zeros((n, n_classes));
    let mut intercept = vec![0.0; n_classes];
    for (k, fit) in per_class.iter().enumerate() {
        coefficients.column_mut(k).assign(&fit.a);
        intercept[k] = fit.b;
    }
    let iterations = per_class.iter().map(|c| c.iterations).max().unwrap_or(0);
    let (objective, grad_a, grad_b) =
        hinge_objective_and_gradient(&gram, coefficients.view(), &intercept, props, opts.lambda);
    let mut gradient_norm = grad_a.iter().map(|g| g * g).sum::<f64>();
    if opts.fit_intercept {
        gradient_norm += grad_b.iter().map(|g| g * g).sum::<f64>();
    }
    let gradient_norm = gradient_norm.sqrt();
    let converged = gradient_norm <= opts.tol * (1.0 + objective.abs());

    let predictor = Predictor::new(
        ModelTask::ClassificationOva,
        kernel,
        x.to_owned(),
        coefficients,
        intercept,
    )?;
    Ok(HingeFit {
        predictor,
        objective,
        gradient_norm,
        iterations,
        converged,
    })
}

/// Full one-vs-all objective `Σ_k J_k`.
pub fn hinge_objective(
    gram: &Array2<f64>,
    coef: ArrayView2<'_, f64>,
    intercept: &[f64],
    props: &TransportedProportions,
    lambda: f64,
) -> f64 {
    (0..coef.ncols())
        .map(|k| class_objective(gram, coef.column(k), intercept[k], props.0.column(k), lambda))
        .sum()
}

/// Objective with its gradient in coefficient space (`N × K`) and with respect
/// to the intercepts.
pub fn hinge_objective_and_gradient(
    gram: &Array2<f64>,
    coef: ArrayView2<'_, f64>,
    intercept: &[f64],
    props: &TransportedProportions,
    lambda: f64,
) -> (f64, Array2<f64>, Vec<f64>) {
    let mut grad = Array2::zeros(coef.raw_dim());
    let mut grad_b = vec![0.0; coef.ncols()];
    let mut total = 0.0;
    for k in 0..coef.ncols() {
        let (obj, ga, gb) = class_objective_and_gradient(gram, coef.column(k), intercept[k], props.0.column(k), lambda);
        total += obj;
        grad.column_mut(k).assign(&ga);
        grad_b[k] = gb;
    }
    (total, grad, grad_b)
}

fn class_objective(gram: &Array2<f64>, a: ArrayView1<'_, f64>, b: f64, p: ArrayView1<'_, f64>, lambda: f64) -> f64 {
    let ka = gram.dot(&a);
    let n = a.len() as f64;
    let data: f64 = ka
        .iter()
        .zip(p.iter())
        .map(|(&f, &pk)| {
            let f = f + b;
            let pos = (1.0 - f).max(0.0);
            let neg = (1.0 + f).max(0.0);
            pk * pos * pos + (1.0 - pk) * neg * neg
        })
        .sum();
    data / n + lambda * a.dot(&ka)
}

fn class_objective_and_gradient(
    gram: &Array2<f64>,
    a: ArrayView1<'_, f64>,
    b: f64,
    p: ArrayView1<'_, f64>,
    lambda: f64,
) -> (f64, Array1<f64>, f64) {
    let ka = gram.dot(&a);
    let n = a.len() as f64;
    let mut data = 0.0;
    // d(data)/df_j
    let mut df = Array1::zeros(a.len());
    for j in 0..a.len() {
        let f = ka[j] + b;
        let pk = p[j];
        let pos = (1.0 - f).max(0.0);
        let neg = (1.0 + f).max(0.0);
        data += pk * pos * pos + (1.0 - pk) * neg * neg;
        df[j] = 2.0 * (-pk * pos + (1.0 - pk) * neg) / n;
    }
    let obj = data / n + lambda * a.dot(&ka);
    // ∇_a = K (df + 2λa), using the symmetry of K
    let inner = &df + &(&a * (2.0 * lambda));
    let grad_a = gram.dot(&inner);
    let grad_b = df.sum();
    (obj, grad_a, grad_b)
}

struct ClassFit {
    a: Array1<f64>,
    b: f64,
    iterations: usize,
}

fn fit_one_class(gram: &Array2<f64>, p: ArrayView1<'_, f64>, opts: &LearnerOptions, tol: f64) -> Result<ClassFit> {
    let n = p.len();
    let lambda = opts.lambda;
    let mut a = Array1::<f64>::zeros(n);
    let mut b = 0.0;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let (obj, grad_a, grad_b) = class_objective_and_gradient(gram, a.view(), b, p, lambda);
        let grad_b = if opts.fit_intercept { grad_b } else { 0.0 };
        let gnorm = (grad_a.dot(&grad_a) + grad_b * grad_b).sqrt();
        if gnorm <= tol * (1.0 + obj.abs()) {
            break;
        }
        iterations += 1;

        let (mut da, mut db) = match newton_point(gram, a.view(), b, p, lambda, opts.fit_intercept) {
            Some((a_new, b_new)) => (&a_new - &a, b_new - b),
            None => (-&grad_a, -grad_b),
        };
        let mut slope = grad_a.dot(&da) + grad_b * db;
        if slope.is_nan() || slope >= 0.0 {
            da = -&grad_a;
            db = -grad_b;
            slope = -(gnorm * gnorm);
        }

        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-16 {
            let a_try = &a + &(&da * step);
            let b_try = b + step * db;
            if class_objective(gram, a_try.view(), b_try, p, lambda) <= obj + ARMIJO * step * slope {
                a = a_try;
                b = b_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No representable decrease left along a descent direction.
            break;
        }
    }
    Ok(ClassFit { a, b, iterations })
}

/// Minimizer of the quadratic obtained by freezing the active hinge terms at
/// the current scores.
fn newton_point(
    gram: &Array2<f64>,
    a: ArrayView1<'_, f64>,
    b: f64,
    p: ArrayView1<'_, f64>,
    lambda: f64,
    fit_intercept: bool,
) -> Option<(Array1<f64>, f64)> {
    let n = a.len();
    let f = gram.dot(&a) + b;
    let mut weight = Array1::<f64>::zeros(n);
    let mut target = Array1::<f64>::zeros(n);
    for j in 0..n {
        if f[j] < 1.0 {
            weight[j] += p[j];
            target[j] += p[j];
        }
        if f[j] > -1.0 {
            weight[j] += 1.0 - p[j];
            target[j] -= 1.0 - p[j];
        }
    }
    let dim = if fit_intercept { n + 1 } else { n };
    let mut system = Array2::<f64>::zeros((dim, dim));
    {
        let mut block = system.slice_mut(s![..n, ..n]);
        for i in 0..n {
            for j in 0..n {
                block[[i, j]] = weight[i] * gram[[i, j]];
            }
            block[[i, i]] += n as f64 * lambda;
        }
    }
    let mut rhs = Array2::<f64>::zeros((dim, 1));
    rhs.slice_mut(s![..n, 0]).assign(&target);
    if fit_intercept {
        system.slice_mut(s![..n, n]).assign(&weight);
        system.slice_mut(s![n, ..n]).fill(1.0);
    }
    let sol = solve_lu(&system, &rhs).ok()?;
    let a_new = sol.slice(s![..n, 0]).to_owned();
    let b_new = if fit_intercept { sol[[n, 0]] } else { 0.0 };
    Some((a_new, b_new))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts(lambda: f64) -> LearnerOptions {
        LearnerOptions {
            lambda,
            ..LearnerOptions::default()
        }
    }

    #[test]
    fn one_hot_point_gets_positive_score() {
        let x = array![[-1.0], [1.0]];
        let props = TransportedProportions(array![[1.0, 0.0], [0.0, 1.0]]);
        let fit = fit_hinge_ova(x.view(), &props, Kernel::Rbf { gamma: 1.0 }, &opts(1e-8)).unwrap();
        assert!(fit.converged);
        let s = fit.predictor.scores(x.view()).unwrap();
        assert!(s[[0, 0]] > 0.0 && s[[1, 1]] > 0.0);
        assert!(s[[0, 1]] < 0.0 && s[[1, 0]] < 0.0);
    }

    #[test]
    fn uniform_proportions_give_equal_class_objectives() {
        let x = array![[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let props = TransportedProportions(Array2::from_elem((4, 3), 1.0 / 3.0));
        let fit = fit_hinge_ova(x.view(), &props, Kernel::Rbf { gamma: 0.5 }, &opts(1e-2)).unwrap();
        let gram = fit.predictor.kernel.gram(x.view());
        let per: Vec<f64> = (0..3)
            .map(|k| {
                class_objective(
                    &gram,
                    fit.predictor.coefficients.column(k),
                    0.0,
                    props.0.column(k),
                    1e-2,
                )
            })
            .collect();
        assert!((per[0] - per[1]).abs() < 1e-6 && (per[1] - per[2]).abs() < 1e-6);
    }

    #[test]
    fn objective_not_above_zero_predictor() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((15, 2), |_| rng.random_range(-2.0..2.0));
        let raw = Array2::from_shape_fn((15, 3), |_| rng.random_range(0.0..1.0));
        let props = TransportedProportions(&raw / &raw.sum_axis(ndarray::Axis(1)).insert_axis(ndarray::Axis(1)));
        for intercept in [false, true] {
            let o = LearnerOptions {
                fit_intercept: intercept,
                ..opts(1e-2)
            };
            let fit = fit_hinge_ova(x.view(), &props, Kernel::Rbf { gamma: 0.7 }, &o).unwrap();
            let gram = Kernel::Rbf { gamma: 0.7 }.gram(x.view());
            let zero = hinge_objective(&gram, Array2::zeros((15, 3)).view(), &[0.0; 3], &props, 1e-2);
            assert!(fit.converged, "intercept={intercept}");
            assert!(fit.objective <= zero);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 6;
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
        let gram = Kernel::Rbf { gamma: 1.0 }.gram(x.view());
        let raw = Array2::from_shape_fn((n, 3), |_| rng.random_range(0.0..1.0));
        let props = TransportedProportions(&raw / &raw.sum_axis(ndarray::Axis(1)).insert_axis(ndarray::Axis(1)));
        let coef = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let b = [0.1, -0.2, 0.3];
        let (_, g, gb) = hinge_objective_and_gradient(&gram, coef.view(), &b, &props, 0.05);
        let h = 1e-5;
        for i in 0..n {
            for k in 0..3 {
                let mut up = coef.clone();
                up[[i, k]] += h;
                let mut dn = coef.clone();
                dn[[i, k]] -= h;
                let fd = (hinge_objective(&gram, up.view(), &b, &props, 0.05)
                    - hinge_objective(&gram, dn.view(), &b, &props, 0.05))
                    / (2.0 * h);
                assert!((fd - g[[i, k]]).abs() <= 1e-6 * g[[i, k]].abs().max(1e-3));
            }
        }
        let mut bu = b;
        bu[1] += h;
        let mut bd = b;
        bd[1] -= h;
        let fd = (hinge_objective(&gram, coef.view(), &bu, &props, 0.05)
            - hinge_objective(&gram, coef.view(), &bd, &props, 0.05))
            / (2.0 * h);
        assert!((fd - gb[1]).abs() < 1e-7);
    }

    #[test]
    fn max_iter_exhaustion_is_flagged() {
        // Linear scores cannot fit random one-hot labels, so the hinge
        // active set changes and a single Newton step is not enough.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((20, 2), |_| rng.random_range(-2.0..2.0));
        let mut p = Array2::zeros((20, 2));
        for j in 0..20 {
            p[[j, rng.random_range(0..2)]] = 1.0;
        }
        let props = TransportedProportions(p);
        let o = LearnerOptions {
            max_iter: 1,
            tol: 1e-14,
            ..opts(1e-3)
        };
        let fit = fit_hinge_ova(x.view(), &props, Kernel::Linear, &o).unwrap();
        assert!(!fit.converged);
        assert!(fit.gradient_norm > 0.0);
    }
}
