//! C ABI for the jdot library.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`JdotStatus`]; on failure a message is
//!   available from [`jdot_last_error_message`] on the same thread.
//! * Matrices are dense, row-major `double` arrays with explicit dimensions.
//! * Handles ([`JdotPlan`], [`JdotModel`]) are opaque, created by the library
//!   and released with the matching `*_free` function. Freeing `NULL` is a no-op.
//! * Strings returned by the library are NUL-terminated UTF-8 and must be
//!   released with [`jdot_string_free`].
//! * Panics never cross the boundary; they surface as `JDOT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jdot::data::{Domain, LabeledDataset, Labels, Task};
use jdot::jdot::{jdot_fit, AlphaSetting, JdotConfig, OtSolver};
use jdot::kernel::KernelSpec;
use jdot::learners::Predictor;
use jdot::ot::{solve_entropic, solve_exact, CostMatrix, EntropicOptions, TransportPlan};
use jdot::{Error, ErrorKind};
use ndarray::{Array2, ArrayView2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JdotStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Invalid argument values or inconsistent dimensions.
    InvalidInput = 2,
    /// Malformed serialized data.
    Data = 3,
    /// A numerical solver failed.
    Solver = 4,
    /// An output buffer is smaller than required.
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JdotKernel {
    Linear = 0,
    Rbf = 1,
}

/// Options for [`jdot_model_fit_regression`] and [`jdot_model_fit_classification`].
/// Start from [`jdot_fit_options_default`] and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct JdotFitOptions {
    /// Weight of the feature distance; `<= 0` selects `1 / max squared distance`.
    pub alpha: f64,
    /// Weight of the squared RKHS norm.
    pub lambda: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub kernel: JdotKernel,
    /// RBF bandwidth; `<= 0` selects the median heuristic on target inputs.
    pub gamma: f64,
    pub fit_intercept: bool,
    /// Entropic OT regularization; `0` selects the exact solver.
    pub entropic_epsilon: f64,
}

/// Transport plan between `n_source` and `n_target` uniformly weighted samples.
pub struct JdotPlan {
    inner: TransportPlan,
}

/// A fitted prediction function.
pub struct JdotModel {
    inner: Predictor,
    alpha: f64,
    iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: JdotStatus,
    message: String,
}

impl Failure {
    fn new(status: JdotStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(JdotStatus::NullPointer, format!("{what} is NULL"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Input => JdotStatus::InvalidInput,
            ErrorKind::Data | ErrorKind::Io => JdotStatus::Data,
            ErrorKind::Solver => JdotStatus::Solver,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> JdotStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JdotStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            JdotStatus::Panic
        }
    }
}

/// Borrow a row-major `rows × cols` matrix.
///
/// # Safety
/// `data` must point to `rows·cols` readable doubles.
unsafe fn matrix<'a>(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<ArrayView2<'a, f64>, Failure> {
    if data.is_null() {
        return Err(Failure::null(what));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Failure::new(JdotStatus::InvalidInput, format!("{what}: size overflow")))?;
    if len == 0 {
        return Err(Failure::new(JdotStatus::InvalidInput, format!("{what} is empty")));
    }
    let slice = unsafe { std::slice::from_raw_parts(data, len) };
    ArrayView2::from_shape((rows, cols), slice).map_err(|e| Failure::new(JdotStatus::InvalidInput, e.to_string()))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure::null(what))
    } else {
        Ok(p)
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn jdot_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Solve exact OT with uniform marginals for a row-major `n_source × n_target` cost.
///
/// # Safety
/// `cost` must point to `n_source·n_target` doubles and `out` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn jdot_plan_solve_exact(
    cost: *const f64,
    n_source: usize,
    n_target: usize,
    out: *mut *mut JdotPlan,
) -> JdotStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = unsafe { matrix(cost, n_source, n_target, "cost") }?;
        let plan = solve_exact(&CostMatrix::new(c.to_owned())?)?;
        unsafe { *out = Box::into_raw(Box::new(JdotPlan { inner: plan })) };
        Ok(())
    })
}

/// Solve entropic OT (log-domain Sinkhorn). Non-convergence within `max_iter`
/// is not an error; query it with [`jdot_plan_converged`].
///
/// # Safety
/// As for [`jdot_plan_solve_exact`].
#[no_mangle]
pub unsafe extern "C" fn jdot_plan_solve_entropic(
    cost: *const f64,
    n_source: usize,
    n_target: usize,
    epsilon: f64,
    max_iter: usize,
    tol: f64,
    out: *mut *mut JdotPlan,
) -> JdotStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = unsafe { matrix(cost, n_source, n_target, "cost") }?;
        let opts = EntropicOptions { epsilon, max_iter, tol };
        let plan = solve_entropic(&CostMatrix::new(c.to_owned())?, &opts)?;
        unsafe { *out = Box::into_raw(Box::new(JdotPlan { inner: plan })) };
        Ok(())
    })
}

/// `⟨γ, C⟩` for the cost the plan was solved on.
///
/// # Safety
/// `plan` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_plan_objective(plan: *const JdotPlan, out: *mut f64) -> JdotStatus {
    guard(|| {
        let plan = unsafe { plan.as_ref() }.ok_or_else(|| Failure::null("plan"))?;
        let out = out_ptr(out, "out")?;
        unsafe { *out = plan.inner.objective };
        Ok(())
    })
}

/// Whether the solver met its tolerance, and the largest marginal deviation.
///
/// # Safety
/// `plan` must be a live handle; `converged` and `marginal_error` writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_plan_converged(
    plan: *const JdotPlan,
    converged: *mut bool,
    marginal_error: *mut f64,
) -> JdotStatus {
    guard(|| {
        let plan = unsafe { plan.as_ref() }.ok_or_else(|| Failure::null("plan"))?;
        let converged = out_ptr(converged, "converged")?;
        let marginal_error = out_ptr(marginal_error, "marginal_error")?;
        unsafe {
            *converged = plan.inner.status.converged;
            *marginal_error = plan.inner.status.marginal_error;
        }
        Ok(())
    })
}

/// Copy the coupling, row-major, into `buffer` of `len` doubles
/// (at least `n_source·n_target`).
///
/// # Safety
/// `plan` must be a live handle and `buffer` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jdot_plan_copy_coupling(plan: *const JdotPlan, buffer: *mut f64, len: usize) -> JdotStatus {
    guard(|| {
        let plan = unsafe { plan.as_ref() }.ok_or_else(|| Failure::null("plan"))?;
        let buffer = out_ptr(buffer, "buffer")?;
        let g = &plan.inner.coupling;
        if len < g.len() {
            return Err(Failure::new(
                JdotStatus::BufferTooSmall,
                format!("coupling needs {} doubles, buffer has {len}", g.len()),
            ));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(buffer, g.len()) };
        for (d, v) in dst.iter_mut().zip(g.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jdot_plan_free(plan: *mut JdotPlan) {
    if !plan.is_null() {
        drop(unsafe { Box::from_raw(plan) });
    }
}

#[no_mangle]
pub extern "C" fn jdot_fit_options_default() -> JdotFitOptions {
    JdotFitOptions {
        alpha: 0.0,
        lambda: 1e-2,
        max_iter: 10,
        rel_tol: 1e-5,
        kernel: JdotKernel::Rbf,
        gamma: 0.0,
        fit_intercept: false,
        entropic_epsilon: 0.0,
    }
}

fn config(task: Task, opts: &JdotFitOptions) -> Result<JdotConfig, Failure> {
    let mut cfg = JdotConfig::new(task);
    cfg.alpha = if opts.alpha > 0.0 {
        AlphaSetting::Value(opts.alpha)
    } else {
        AlphaSetting::Heuristic
    };
    cfg.lambda = opts.lambda;
    cfg.max_iter = opts.max_iter;
    cfg.rel_tol = opts.rel_tol;
    cfg.kernel = match opts.kernel {
        JdotKernel::Linear => KernelSpec::Linear,
        JdotKernel::Rbf => KernelSpec::Rbf {
            gamma: (opts.gamma > 0.0).then_some(opts.gamma),
        },
    };
    cfg.fit_intercept = opts.fit_intercept;
    cfg.ot = if opts.entropic_epsilon == 0.0 {
        OtSolver::Exact
    } else {
        OtSolver::Entropic(EntropicOptions::new(opts.entropic_epsilon))
    };
    Ok(cfg)
}

fn fit(
    source: LabeledDataset,
    target: ArrayView2<'_, f64>,
    task: Task,
    opts: *const JdotFitOptions,
    out: *mut *mut JdotModel,
) -> Result<(), Failure> {
    let out = out_ptr(out, "out")?;
    let opts = match unsafe { opts.as_ref() } {
        Some(o) => *o,
        None => jdot_fit_options_default(),
    };
    let trace = jdot_fit(&source, target, &config(task, &opts)?)?;
    let model = JdotModel {
        inner: trace.final_model,
        alpha: trace.alpha,
        iterations: trace.iterations,
    };
    unsafe { *out = Box::into_raw(Box::new(model)) };
    Ok(())
}

/// Fit a kernel ridge regression JDOT model.
///
/// `xs` is `n_source × n_features`, `ys` is `n_source × n_outputs`, `xt` is
/// `n_target × n_features`. `options` may be NULL for defaults.
///
/// # Safety
/// All arrays must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_fit_regression(
    xs: *const f64,
    n_source: usize,
    n_features: usize,
    ys: *const f64,
    n_outputs: usize,
    xt: *const f64,
    n_target: usize,
    options: *const JdotFitOptions,
    out: *mut *mut JdotModel,
) -> JdotStatus {
    guard(|| {
        let xs = unsafe { matrix(xs, n_source, n_features, "xs") }?;
        let ys = unsafe { matrix(ys, n_source, n_outputs, "ys") }?;
        let xt = unsafe { matrix(xt, n_target, n_features, "xt") }?;
        let source = LabeledDataset::new(xs.to_owned(), Some(Labels::Values(ys.to_owned())), Domain::Source)?;
        fit(source, xt, Task::Regression, options, out)
    })
}

/// Fit a one-vs-all squared hinge JDOT classifier. `ys` holds `n_source`
/// class indices in `0..n_classes`.
///
/// # Safety
/// As for [`jdot_model_fit_regression`]; `ys` must hold `n_source` values.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_fit_classification(
    xs: *const f64,
    n_source: usize,
    n_features: usize,
    ys: *const usize,
    n_classes: usize,
    xt: *const f64,
    n_target: usize,
    options: *const JdotFitOptions,
    out: *mut *mut JdotModel,
) -> JdotStatus {
    guard(|| {
        let xs = unsafe { matrix(xs, n_source, n_features, "xs") }?;
        if ys.is_null() {
            return Err(Failure::null("ys"));
        }
        let indices = unsafe { std::slice::from_raw_parts(ys, n_source) }.to_vec();
        let xt = unsafe { matrix(xt, n_target, n_features, "xt") }?;
        let labels = Labels::Classes { indices, n_classes };
        let source = LabeledDataset::new(xs.to_owned(), Some(labels), Domain::Source)?;
        fit(source, xt, Task::Classification, options, out)
    })
}

/// Number of outputs: regression targets or classes.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_output_dim(model: *const JdotModel, out: *mut usize) -> JdotStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| Failure::null("model"))?;
        let out = out_ptr(out, "out")?;
        unsafe { *out = model.inner.output_dim() };
        Ok(())
    })
}

/// The `α` used by the fit and the number of descent iterations run. Both are
/// 0 for a model loaded from JSON.
///
/// # Safety
/// `model` must be a live handle; `alpha` and `iterations` writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_fit_info(
    model: *const JdotModel,
    alpha: *mut f64,
    iterations: *mut usize,
) -> JdotStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| Failure::null("model"))?;
        let alpha = out_ptr(alpha, "alpha")?;
        let iterations = out_ptr(iterations, "iterations")?;
        unsafe {
            *alpha = model.alpha;
            *iterations = model.iterations;
        }
        Ok(())
    })
}

/// Raw outputs (`n × output_dim`, row-major) for `n × n_features` inputs.
///
/// # Safety
/// `x` must hold `n·n_features` doubles and `out` be writable for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_predict(
    model: *const JdotModel,
    x: *const f64,
    n: usize,
    n_features: usize,
    out: *mut f64,
    out_len: usize,
) -> JdotStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| Failure::null("model"))?;
        let x = unsafe { matrix(x, n, n_features, "x") }?;
        let out = out_ptr(out, "out")?;
        let scores: Array2<f64> = model.inner.scores(x)?;
        if out_len < scores.len() {
            return Err(Failure::new(
                JdotStatus::BufferTooSmall,
                format!("predictions need {} doubles, buffer has {out_len}", scores.len()),
            ));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(out, scores.len()) };
        for (d, v) in dst.iter_mut().zip(scores.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// Argmax class per input row (lowest index on ties).
///
/// # Safety
/// `x` must hold `n·n_features` doubles and `out` be writable for `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_predict_classes(
    model: *const JdotModel,
    x: *const f64,
    n: usize,
    n_features: usize,
    out: *mut usize,
    out_len: usize,
) -> JdotStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| Failure::null("model"))?;
        let x = unsafe { matrix(x, n, n_features, "x") }?;
        let out = out_ptr(out, "out")?;
        if out_len < n {
            return Err(Failure::new(
                JdotStatus::BufferTooSmall,
                format!("predictions need {n} values, buffer has {out_len}"),
            ));
        }
        let classes = model.inner.predict_classes(x)?;
        let dst = unsafe { std::slice::from_raw_parts_mut(out, n) };
        dst.copy_from_slice(&classes);
        Ok(())
    })
}

/// Serialize the model to JSON (same layout as the CLI's model files).
/// Release the string with [`jdot_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_to_json(model: *const JdotModel, out: *mut *mut c_char) -> JdotStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| Failure::null("model"))?;
        let out = out_ptr(out, "out")?;
        let json = model.inner.to_json()?;
        let c = CString::new(json).map_err(|e| Failure::new(JdotStatus::Data, e.to_string()))?;
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_from_json(json: *const c_char, out: *mut *mut JdotModel) -> JdotStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::null("json"));
        }
        let out = out_ptr(out, "out")?;
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| Failure::new(JdotStatus::Data, e.to_string()))?;
        let inner = Predictor::from_json(text)?;
        let model = JdotModel {
            inner,
            alpha: 0.0,
            iterations: 0,
        };
        unsafe { *out = Box::into_raw(Box::new(model)) };
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jdot_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jdot_model_free(model: *mut JdotModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}
