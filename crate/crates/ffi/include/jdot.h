#ifndef JDOT_H
#define JDOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JdotStatus {
  JDOT_STATUS_OK = 0,
  // A required pointer argument was NULL.
  JDOT_STATUS_NULL_POINTER = 1,
  // Invalid argument values or inconsistent dimensions.
  JDOT_STATUS_INVALID_INPUT = 2,
  // Malformed serialized data.
  JDOT_STATUS_DATA = 3,
  // A numerical solver failed.
  JDOT_STATUS_SOLVER = 4,
  // An output buffer is smaller than required.
  JDOT_STATUS_BUFFER_TOO_SMALL = 5,
  JDOT_STATUS_PANIC = 6,
} JdotStatus;

typedef enum JdotKernel {
  JDOT_KERNEL_LINEAR = 0,
  JDOT_KERNEL_RBF = 1,
} JdotKernel;

// A fitted prediction function.
typedef struct JdotModel JdotModel;

// Transport plan between `n_source` and `n_target` uniformly weighted samples.
typedef struct JdotPlan JdotPlan;

// Options for [`jdot_model_fit_regression`] and [`jdot_model_fit_classification`].
// Start from [`jdot_fit_options_default`] and override fields.
typedef struct JdotFitOptions {
  // Weight of the feature distance; `<= 0` selects `1 / max squared distance`.
  double alpha;
  // Weight of the squared RKHS norm.
  double lambda;
  size_t max_iter;
  double rel_tol;
  enum JdotKernel kernel;
  // RBF bandwidth; `<= 0` selects the median heuristic on target inputs.
  double gamma;
  bool fit_intercept;
  // Entropic OT regularization; `0` selects the exact solver.
  double entropic_epsilon;
} JdotFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *jdot_last_error_message(void);

// Solve exact OT with uniform marginals for a row-major `n_source × n_target` cost.
//
// # Safety
// `cost` must point to `n_source·n_target` doubles and `out` to writable storage
// for one pointer.
enum JdotStatus jdot_plan_solve_exact(const double *cost,
                                      size_t n_source,
                                      size_t n_target,
                                      struct JdotPlan **out);

// Solve entropic OT (log-domain Sinkhorn). Non-convergence within `max_iter`
// is not an error; query it with [`jdot_plan_converged`].
//
// # Safety
// As for [`jdot_plan_solve_exact`].
enum JdotStatus jdot_plan_solve_entropic(const double *cost,
                                         size_t n_source,
                                         size_t n_target,
                                         double epsilon,
                                         size_t max_iter,
                                         double tol,
                                         struct JdotPlan **out);

// `⟨γ, C⟩` for the cost the plan was solved on.
//
// # Safety
// `plan` must be a live handle and `out` writable.
enum JdotStatus jdot_plan_objective(const struct JdotPlan *plan, double *out);

// Whether the solver met its tolerance, and the largest marginal deviation.
//
// # Safety
// `plan` must be a live handle; `converged` and `marginal_error` writable.
enum JdotStatus jdot_plan_converged(const struct JdotPlan *plan,
                                    bool *converged,
                                    double *marginal_error);

// Copy the coupling, row-major, into `buffer` of `len` doubles
// (at least `n_source·n_target`).
//
// # Safety
// `plan` must be a live handle and `buffer` writable for `len` doubles.
enum JdotStatus jdot_plan_copy_coupling(const struct JdotPlan *plan, double *buffer, size_t len);

// # Safety
// `plan` must be NULL or a handle not yet freed.
void jdot_plan_free(struct JdotPlan *plan);

struct JdotFitOptions jdot_fit_options_default(void);

// Fit a kernel ridge regression JDOT model.
//
// `xs` is `n_source × n_features`, `ys` is `n_source × n_outputs`, `xt` is
// `n_target × n_features`. `options` may be NULL for defaults.
//
// # Safety
// All arrays must hold the stated number of doubles; `out` must be writable.
enum JdotStatus jdot_model_fit_regression(const double *xs,
                                          size_t n_source,
                                          size_t n_features,
                                          const double *ys,
                                          size_t n_outputs,
                                          const double *xt,
                                          size_t n_target,
                                          const struct JdotFitOptions *options,
                                          struct JdotModel **out);

// Fit a one-vs-all squared hinge JDOT classifier. `ys` holds `n_source`
// class indices in `0..n_classes`.
//
// # Safety
// As for [`jdot_model_fit_regression`]; `ys` must hold `n_source` values.
enum JdotStatus jdot_model_fit_classification(const double *xs,
                                              size_t n_source,
                                              size_t n_features,
                                              const size_t *ys,
                                              size_t n_classes,
                                              const double *xt,
                                              size_t n_target,
                                              const struct JdotFitOptions *options,
                                              struct JdotModel **out);

// Number of outputs: regression targets or classes.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum JdotStatus jdot_model_output_dim(const struct JdotModel *model, size_t *out);

// The `α` used by the fit and the number of descent iterations run. Both are
// 0 for a model loaded from JSON.
//
// # Safety
// `model` must be a live handle; `alpha` and `iterations` writable.
enum JdotStatus jdot_model_fit_info(const struct JdotModel *model,
                                    double *alpha,
                                    size_t *iterations);

// Raw outputs (`n × output_dim`, row-major) for `n × n_features` inputs.
//
// # Safety
// `x` must hold `n·n_features` doubles and `out` be writable for `out_len` doubles.
enum JdotStatus jdot_model_predict(const struct JdotModel *model,
                                   const double *x,
                                   size_t n,
                                   size_t n_features,
                                   double *out,
                                   size_t out_len);

// Argmax class per input row (lowest index on ties).
//
// # Safety
// `x` must hold `n·n_features` doubles and `out` be writable for `out_len` values.
enum JdotStatus jdot_model_predict_classes(const struct JdotModel *model,
                                           const double *x,
                                           size_t n,
                                           size_t n_features,
                                           size_t *out,
                                           size_t out_len);

// Serialize the model to JSON (same layout as the CLI's model files).
// Release the string with [`jdot_string_free`].
//
// # Safety
// `model` must be a live handle and `out` writable.
enum JdotStatus jdot_model_to_json(const struct JdotModel *model, char **out);

// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum JdotStatus jdot_model_from_json(const char *json, struct JdotModel **out);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void jdot_string_free(char *s);

// # Safety
// `model` must be NULL or a handle not yet freed.
void jdot_model_free(struct JdotModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JDOT_H */
