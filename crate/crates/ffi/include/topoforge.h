#ifndef TOPOFORGE_H
#define TOPOFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID_ARGUMENT = 2,
  TF_STATUS_INVALID_DESIGN = 3,
  TF_STATUS_INFEASIBLE_DESIGN = 4,
  TF_STATUS_BACKEND = 5,
  TF_STATUS_IO = 6,
  TF_STATUS_PARSE = 7,
  TF_STATUS_BUDGET = 8,
  TF_STATUS_NUMERICAL = 9,
  TF_STATUS_INTERNAL = 10,
} TfStatus;

// Simulation fidelity.
typedef enum TfFidelity {
  TF_FIDELITY_COARSE = 0,
  TF_FIDELITY_FINE = 1,
} TfFidelity;

// Design vector `[c, rho_f, phi_f, rho_1..L, phi_1..L]`.
typedef struct TfDesign TfDesign;

// Frequency-scaling model.
typedef struct TfScalingModel TfScalingModel;

// Simulator with its own evaluation counter.
typedef struct TfSimulator TfSimulator;

// Frequency sweep `[f_min, f_max]` GHz with `n_points` samples.
typedef struct TfGrid {
  double f_min;
  double f_max;
  size_t n_points;
} TfGrid;

// Classifier outcome.
typedef struct TfVerdict {
  bool accepted;
  // Best scale (mm).
  double c_star;
  // Margin at `c_star` (dB); accepted iff `<= 0`.
  double u_q;
} TfVerdict;

// Summary of a complete run.
typedef struct TfRunSummary {
  double in_band_max_db;
  bool meets_goal;
  uint64_t n_coarse;
  uint64_t n_fine;
  double fine_equivalent;
  // Achieved bandwidth; NaN when the band center misses the goal.
  double bw_ghz;
  double bw_percent;
} TfRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next failing call.
const char *tf_last_error(void);

// Library version (static string).
const char *tf_version(void);

// Default sweep: 1-10 GHz, 451 points.
struct TfGrid tf_grid_default(void);

// Creates a simulator from a backend spec (`"mock"` or `"tabulated:<dir>"`).
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum TfStatus tf_simulator_new(const char *spec, struct TfSimulator **out_sim);

// # Safety
// `sim` must come from [`tf_simulator_new`] and not be used afterwards. Null is ignored.
void tf_simulator_free(struct TfSimulator *sim);

// Simulations performed so far, and their cost in fine-equivalent units.
//
// # Safety
// `sim` must be a live handle; output pointers must be writable.
enum TfStatus tf_simulator_counts(const struct TfSimulator *sim,
                                  uint64_t *n_coarse,
                                  uint64_t *n_fine,
                                  double *fine_equivalent);

// Builds a design from `len = 2L + 3` values.
//
// # Safety
// `values` must point to `len` doubles; `out_design` must be writable.
enum TfStatus tf_design_new(const double *values, size_t len, struct TfDesign **out_design);

// Parses a whitespace- or comma-separated design vector.
//
// # Safety
// `text_in` must be NUL-terminated; `out_design` must be writable.
enum TfStatus tf_design_parse(const char *text_in, struct TfDesign **out_design);

// # Safety
// `design` must come from this library and not be used afterwards. Null is ignored.
void tf_design_free(struct TfDesign *design);

// Number of design parameters, or 0 for a null handle.
//
// # Safety
// `design` must be a live handle or null.
size_t tf_design_dim(const struct TfDesign *design);

// Copies the parameters into `buf` (`len` must equal the dimension).
//
// # Safety
// `buf` must have room for `len` doubles.
enum TfStatus tf_design_values(const struct TfDesign *design, double *buf, size_t len);

// Checks the layout (simple outline, feed clearance). `feasible` receives the
// verdict; the status is `TF_STATUS_OK` either way.
//
// # Safety
// `design` must be live; `feasible` writable.
enum TfStatus tf_design_is_feasible(const struct TfDesign *design, bool *feasible);

// Simulates `design` and writes `grid.n_points` reflection values (dB) to `values`.
//
// # Safety
// Handles must be live; `values` must have room for `len` doubles.
enum TfStatus tf_simulate(const struct TfSimulator *sim,
                          const struct TfDesign *design,
                          struct TfGrid grid,
                          enum TfFidelity fidelity,
                          double *values,
                          size_t len);

// Scaling model `alpha(c) = b0 c^2 + b1 c + b2` with reference scale `c0`.
//
// # Safety
// `out_model` must be writable.
enum TfStatus tf_scaling_model_new(double b0,
                                   double b1,
                                   double b2,
                                   double c0,
                                   struct TfScalingModel **out_model);

// Loads a scaling model stored as TOML.
//
// # Safety
// `path` must be NUL-terminated; `out_model` writable.
enum TfStatus tf_scaling_model_load(const char *path, struct TfScalingModel **out_model);

// # Safety
// `model` must come from this library and not be used afterwards. Null is ignored.
void tf_scaling_model_free(struct TfScalingModel *model);

// Evaluates `alpha(c)`.
//
// # Safety
// `model` must be live; `alpha` writable.
enum TfStatus tf_scaling_model_alpha(const struct TfScalingModel *model, double c, double *alpha);

// Classifies a coarse response simulated at scale `c_from` for the band
// `[f_low, f_high]` GHz and threshold `e_t` dB.
//
// # Safety
// `values` must hold `grid.n_points` doubles; handles live; `verdict` writable.
enum TfStatus tf_classify(const struct TfScalingModel *model,
                          const double *values,
                          struct TfGrid grid,
                          double c_from,
                          double e_t,
                          double f_low,
                          double f_high,
                          struct TfVerdict *verdict);

// Surrogate-assisted yield of `design` at fine fidelity.
// `gaussian` selects N(`spread_a`, `spread_b`) mm, otherwise U(-`spread_a`, `spread_a`) mm.
//
// # Safety
// Handles live; `yield_out` writable.
enum TfStatus tf_yield_surrogate(const struct TfSimulator *sim,
                                 const struct TfDesign *design,
                                 bool gaussian,
                                 double spread_a,
                                 double spread_b,
                                 size_t n_samples,
                                 uint64_t seed,
                                 double f_low,
                                 double f_high,
                                 double r_goal,
                                 double *yield_out);

// Runs the complete flow for a TOML configuration (empty string: defaults).
//
// # Safety
// `config_toml` must be NUL-terminated; `summary` writable.
enum TfStatus tf_run(const char *config_toml, struct TfRunSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOFORGE_H */
