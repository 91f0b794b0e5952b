#ifndef LF_H
#define LF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LfStatus {
  LF_STATUS_OK = 0,
  LF_STATUS_NULL_POINTER = 1,
  LF_STATUS_INVALID_ARGUMENT = 2,
  LF_STATUS_NUMERICAL_FAILURE = 3,
  LF_STATUS_IO = 4,
  LF_STATUS_PANIC = 5,
} LfStatus;

typedef enum LfClass {
  LF_CLASS_EXPONENTIALLY_STABLE = 0,
  LF_CLASS_ASYMPTOTICALLY_STABLE = 1,
  LF_CLASS_EXPONENTIALLY_UNSTABLE = 2,
} LfClass;

// Opaque solver handle.
typedef struct LfSolver LfSolver;

// Model coefficients; `dim` is 2 or 3.
typedef struct LfParams {
  double lambda0;
  double lambda1;
  double alpha;
  double beta;
  double gamma0;
  double gamma2;
  size_t dim;
} LfParams;

// Classification summary. Band edges are NaN for the ordered state.
typedef struct LfStability {
  enum LfClass classification;
  double max_growth_rate;
  // Modulus of the maximizing wavevector.
  double argmax_k;
  bool has_band;
  double s_minus_sq;
  double s_plus_sq;
} LfStability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *lf_last_error(void);

// Library version as a static NUL-terminated string.
const char *lf_version(void);

// Classify the disordered (`ordered = false`) or ordered steady state.
//
// # Safety
// `params` and `out` must be valid pointers or null.
enum LfStatus lf_classify(const struct LfParams *params, bool ordered, struct LfStability *out);

// Growth rate of the linearized operator at wavevector `k` (length
// `params.dim`). `direction` (same length) selects the ordered state and
// is ignored otherwise.
//
// # Safety
// Pointers must be valid for `params.dim` elements, or null.
enum LfStatus lf_growth_rate(const struct LfParams *params,
                             bool ordered,
                             const double *direction,
                             const double *k,
                             double *out);

// Create a solver on an `n`-per-axis periodic box of side `length`,
// starting from the zero perturbation. `direction` is read only when
// `ordered` is set.
//
// # Safety
// `params` and `out` must be valid; `direction` must hold `params.dim`
// values when `ordered` is set.
enum LfStatus lf_solver_new(const struct LfParams *params,
                            bool ordered,
                            const double *direction,
                            size_t n,
                            double length,
                            double dt,
                            bool linearized,
                            struct LfSolver **out);

// Release a solver. Null is accepted.
//
// # Safety
// `solver` must come from [`lf_solver_new`] and not be used afterwards.
void lf_solver_free(struct LfSolver *solver);

// Replace the state with a seeded solenoidal random field of RMS
// `amplitude` and spectral scale `k0`; time is reset to zero.
//
// # Safety
// `solver` must be a live handle or null.
enum LfStatus lf_solver_set_random(struct LfSolver *solver,
                                   double amplitude,
                                   double k0,
                                   uint64_t seed);

// Advance by `steps` time steps. On numerical failure the last finite state
// is kept and `LF_STATUS_NUMERICAL_FAILURE` is returned.
//
// # Safety
// `solver` must be a live handle or null.
enum LfStatus lf_solver_advance(struct LfSolver *solver, uint64_t steps);

// # Safety
// `solver` and `out` must be valid or null.
enum LfStatus lf_solver_time(const struct LfSolver *solver, double *out);

// `‖u‖₂²` of the current state.
//
// # Safety
// `solver` and `out` must be valid or null.
enum LfStatus lf_solver_norm_sq(const struct LfSolver *solver, double *out);

// Amplitude of the real Fourier mode with integer lattice index `m`
// (`dim` entries).
//
// # Safety
// `m` must hold `dim` values; pointers valid or null.
enum LfStatus lf_solver_mode_amplitude(const struct LfSolver *solver,
                                       const int64_t *m,
                                       double *out);

// Write the current state as an LFSNAP file.
//
// # Safety
// `path` must be a NUL-terminated string or null.
enum LfStatus lf_solver_write_snapshot(const struct LfSolver *solver, const char *path);

// Parse and run an experiment config, writing outputs to `out_dir` (null
// to write nothing). `exit_code` receives the CLI exit code: 0 pass,
// 1 check failure, 2 numerical failure, 3 config error.
//
// # Safety
// `config_text` must be NUL-terminated; `out_dir` NUL-terminated or null.
enum LfStatus lf_run_config(const char *config_text, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LF_H */
