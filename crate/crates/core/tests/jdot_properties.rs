use jdot::cost::{feature_distance_matrix, squared_hinge};
use jdot::data::{gen_1d_regression_shift, gen_rotated_gaussians};
use jdot::data::{Domain, LabeledDataset, Labels, Task};
use jdot::jdot::{jdot_fit, jdot_objective, AlphaSetting, JdotConfig, OtSolver, Phase};
use jdot::kernel::{Kernel, KernelSpec};
use jdot::learners::{ModelTask, Predictor};
use jdot::metrics::mse;
use jdot::ot::{solve_exact, CostMatrix, EntropicOptions};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn regression_cfg(alpha: f64) -> JdotConfig {
    let mut cfg = JdotConfig::new(Task::Regression);
    cfg.alpha = AlphaSetting::Value(alpha);
    cfg.early_stop = false;
    cfg
}

fn assert_non_increasing(objectives: &[f64], slack: impl Fn(f64) -> f64) {
    for w in objectives.windows(2) {
        assert!(w[1] <= w[0] + slack(w[0]), "objective rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn regression_objective_never_increases() {
    for seed in 0..8 {
        let (s, t) = gen_1d_regression_shift(40, seed).unwrap();
        let trace = jdot_fit(&s, t.x(), &regression_cfg(1.0)).unwrap();
        assert_eq!(trace.steps.len(), 20);
        assert_non_increasing(&trace.objectives(), |o| 1e-8 * (1.0 + o.abs()));
    }
}

#[test]
fn classification_objective_never_increases() {
    for seed in 1..4 {
        let (s, t) = gen_rotated_gaussians(15, std::f64::consts::FRAC_PI_4, seed).unwrap();
        let mut cfg = JdotConfig::new(Task::Classification);
        cfg.alpha = AlphaSetting::Value(0.5);
        cfg.learner_tol = 1e-9;
        cfg.early_stop = false;
        let trace = jdot_fit(&s, t.x(), &cfg).unwrap();
        assert!(trace.steps.iter().all(|h| h.solver_converged));
        assert_non_increasing(&trace.objectives(), |o| 1e-7 * (1.0 + o.abs()));
    }
}

#[test]
fn phases_alternate_and_report_feasible_plans() {
    let (s, t) = gen_1d_regression_shift(30, 2).unwrap();
    let mut cfg = regression_cfg(1.0);
    cfg.max_iter = 4;
    let trace = jdot_fit(&s, t.x(), &cfg).unwrap();
    for (k, step) in trace.steps.iter().enumerate() {
        assert_eq!(step.iter, k / 2 + 1);
        assert_eq!(step.phase, if k % 2 == 0 { Phase::Transport } else { Phase::Learner });
        assert!(step.marginal_violation <= 1e-9);
    }
    let mut cfg = regression_cfg(1.0);
    cfg.max_iter = 3;
    cfg.ot = OtSolver::Entropic(EntropicOptions {
        epsilon: 0.5,
        max_iter: 50_000,
        tol: 1e-9,
    });
    let trace = jdot_fit(&s, t.x(), &cfg).unwrap();
    for step in &trace.steps {
        assert!(step.solver_converged || step.phase == Phase::Learner);
        assert!(step.marginal_violation <= 1e-9);
    }
}

#[test]
fn constant_labels_leave_only_the_feature_transport() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs = Array2::from_shape_fn((9, 2), |_| rng.random_range(-2.0..2.0));
    let xt = Array2::from_shape_fn((9, 2), |_| rng.random_range(-1.0..3.0));
    let source = LabeledDataset::new(
        xs.clone(),
        Some(Labels::Values(Array2::from_elem((9, 1), 1.5))),
        Domain::Source,
    )
    .unwrap();
    let alpha = 0.7;
    let mut cfg = regression_cfg(alpha);
    cfg.max_iter = 1;
    let trace = jdot_fit(&source, xt.view(), &cfg).unwrap();
    let dist = feature_distance_matrix(xs.view(), xt.view()).unwrap();
    let feature_part: f64 = (&trace.final_plan.coupling * &dist).sum() * alpha;
    let oracle = solve_exact(&CostMatrix::new(dist * alpha).unwrap()).unwrap().objective;
    assert!((feature_part - oracle).abs() <= 1e-9, "{feature_part} vs {oracle}");
}

#[test]
fn repeated_fits_are_bit_identical() {
    let (s, t) = gen_rotated_gaussians(12, 0.6, 9).unwrap();
    let mut cfg = JdotConfig::new(Task::Classification);
    cfg.max_iter = 4;
    let a = jdot_fit(&s, t.x(), &cfg).unwrap();
    let b = jdot_fit(&s, t.x(), &cfg).unwrap();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(a.objectives()), bits(b.objectives()));
    assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
    assert_eq!(a.final_model, b.final_model);
}

#[test]
fn identical_domains_with_large_alpha_keep_the_source_model() {
    let (s, _) = gen_1d_regression_shift(25, 6).unwrap();
    let t = s.clone().with_domain(Domain::Target);
    let mut cfg = regression_cfg(1e3);
    cfg.max_iter = 3;
    let trace = jdot_fit(&s, t.x(), &cfg).unwrap();
    let dist = feature_distance_matrix(s.x(), t.x()).unwrap();
    assert!((&trace.final_plan.coupling * &dist).sum().abs() <= 1e-12);
    let truth = t.labels().unwrap().to_matrix();
    let base = mse(trace.initial_model.scores(t.x()).unwrap().view(), truth.view()).unwrap();
    let adapted = mse(trace.final_model.scores(t.x()).unwrap().view(), truth.view()).unwrap();
    assert!(adapted <= base + 1e-9, "{adapted} vs {base}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn source_order_does_not_matter(seed in any::<u64>()) {
        let (s, t) = gen_1d_regression_shift(20, seed).unwrap();
        let mut order: Vec<usize> = (0..20).collect();
        order.reverse();
        order.swap(3, 11);
        let permuted = s.select(&order);
        let mut cfg = regression_cfg(1.0);
        cfg.max_iter = 3;
        let a = jdot_fit(&s, t.x(), &cfg).unwrap().objectives();
        let b = jdot_fit(&permuted, t.x(), &cfg).unwrap().objectives();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn objective_matches_triple_loop(seed in any::<u64>(), classify in any::<bool>(), alpha in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ns, nt, d, k) = (5, 4, 2, 3);
        let xs = Array2::from_shape_fn((ns, d), |_| rng.random_range(-2.0..2.0));
        let xt = Array2::from_shape_fn((nt, d), |_| rng.random_range(-2.0..2.0));
        let g = Array2::from_shape_fn((ns, nt), |_| rng.random::<f64>());
        let m = if classify { k } else { 1 };
        let labels = if classify {
            Labels::Classes { indices: (0..ns).map(|_| rng.random_range(0..k)).collect(), n_classes: k }
        } else {
            Labels::Values(Array2::from_shape_fn((ns, 1), |_| rng.random_range(-3.0..3.0)))
        };
        let task = if classify { ModelTask::ClassificationOva } else { ModelTask::Regression };
        let kernel = Kernel::Rbf { gamma: 0.4 };
        let model = Predictor::new(
            task,
            kernel,
            xt.clone(),
            Array2::from_shape_fn((nt, m), |_| rng.random_range(-1.0..1.0)),
            (0..m).map(|_| rng.random_range(-0.5..0.5)).collect(),
        )
        .unwrap();
        let lambda = 0.3;
        let dist = feature_distance_matrix(xs.view(), xt.view()).unwrap();
        let got = jdot_objective(g.view(), dist.view(), &labels, &model, xt.view(), alpha, lambda).unwrap();

        let mut want = 0.0;
        for i in 0..ns {
            for j in 0..nt {
                let mut dij = 0.0;
                for c in 0..d {
                    dij += (xs[[i, c]] - xt[[j, c]]).powi(2);
                }
                let mut loss = 0.0;
                for out in 0..m {
                    let mut f = model.intercept[out];
                    for l in 0..nt {
                        f += kernel.eval(xt.row(j), xt.row(l)) * model.coefficients[[l, out]];
                    }
                    loss += match &labels {
                        Labels::Values(y) => (y[[i, 0]] - f).powi(2),
                        Labels::Classes { indices, .. } => {
                            squared_hinge(if indices[i] == out { 1.0 } else { -1.0 }, f)
                        }
                    };
                }
                want += g[[i, j]] * (alpha * dij + loss);
            }
        }
        let mut norm = 0.0;
        for out in 0..m {
            for a in 0..nt {
                for b in 0..nt {
                    norm += model.coefficients[[a, out]] * kernel.eval(xt.row(a), xt.row(b)) * model.coefficients[[b, out]];
                }
            }
        }
        want += lambda * norm;
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{} vs {}", got, want);
    }
}

#[test]
fn perfect_matching_costs_only_the_regularizer() {
    // f(x) = 2x through one linear support point; labels lie exactly on it.
    let x = array![[0.5], [1.0], [-2.0]];
    let labels = Labels::Values(&x * 2.0);
    let model = Predictor::new(
        ModelTask::Regression,
        Kernel::Linear,
        array![[1.0]],
        array![[2.0]],
        vec![0.0],
    )
    .unwrap();
    let plan = Array2::eye(3) / 3.0;
    let dist = feature_distance_matrix(x.view(), x.view()).unwrap();
    let obj = jdot_objective(plan.view(), dist.view(), &labels, &model, x.view(), 10.0, 0.25).unwrap();
    assert!((obj - 0.25 * 4.0).abs() < 1e-15);
}

#[test]
fn uniform_plan_on_constant_cost() {
    let xs = array![[0.0], [0.0]];
    let xt = array![[1.0], [1.0], [1.0]];
    let labels = Labels::Values(array![[1.0], [3.0]]);
    // Zero coefficients: the model is the constant intercept 2.
    let model = Predictor::new(
        ModelTask::Regression,
        Kernel::Rbf { gamma: 1.0 },
        xt.clone(),
        Array2::zeros((3, 1)),
        vec![2.0],
    )
    .unwrap();
    let plan = Array2::from_elem((2, 3), 1.0 / 6.0);
    let dist = feature_distance_matrix(xs.view(), xt.view()).unwrap();
    let obj = jdot_objective(plan.view(), dist.view(), &labels, &model, xt.view(), 0.5, 1.0).unwrap();
    assert!((obj - (0.5 + 1.0)).abs() < 1e-15);
}

#[test]
fn heuristic_alpha_is_reported() {
    let (s, t) = gen_1d_regression_shift(15, 1).unwrap();
    let mut cfg = JdotConfig::new(Task::Regression);
    cfg.max_iter = 1;
    cfg.kernel = KernelSpec::Linear;
    let trace = jdot_fit(&s, t.x(), &cfg).unwrap();
    let mut max = 0.0f64;
    for a in s.x().rows() {
        for b in t.x().rows() {
            max = max.max((a[0] - b[0]).powi(2));
        }
    }
    assert!((trace.alpha - 1.0 / max).abs() <= 1e-12);
}
