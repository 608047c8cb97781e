#ifndef MEASURED_CHAOS_H
#define MEASURED_CHAOS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McSystemKind {
  MC_SYSTEM_KIND_HARMONIC = 0,
  MC_SYSTEM_KIND_DOUBLE_WELL = 1,
  MC_SYSTEM_KIND_DRIVEN_HARMONIC = 2,
  MC_SYSTEM_KIND_DUFFING = 3,
} McSystemKind;

// Result code of every call. Values 2–4 match the CLI exit codes.
typedef enum McStatus {
  MC_STATUS_OK = 0,
  MC_STATUS_NULL_POINTER = 1,
  MC_STATUS_CONFIG_ERROR = 2,
  MC_STATUS_NUMERICAL_HALT = 3,
  MC_STATUS_IO_ERROR = 4,
  MC_STATUS_INVALID_ARGUMENT = 5,
  MC_STATUS_BUFFER_TOO_SMALL = 6,
  MC_STATUS_PANIC = 7,
} McStatus;

// Gaussian moment-closure integrator with its own noise stream.
typedef struct McClosure McClosure;

// A validated experiment configuration.
typedef struct McConfig McConfig;

// Conditioned wavefunction on a grid with its own noise stream.
typedef struct McSse McSse;

// System parameters in canonical units; fields unused by `kind` are ignored.
typedef struct McSystem {
  enum McSystemKind kind;
  double m;
  double w0;
  double a;
  double b;
  double lambda;
  double w;
} McSystem;

typedef struct McGaussianState {
  double mean_x;
  double mean_p;
  double var_x;
  double var_p;
  double cov_xp;
} McGaussianState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread ("" after a success).
// The pointer stays valid until the next call on the same thread.
const char *mc_last_error_message(void);

// ħ in pg·µm²/s.
double mc_hbar(void);

// The Duffing oscillator m = 1 pg, A = 990 pg/s², B = 49500 pg/(µm²s²),
// Λ = 30 pg·µm/s², ω = 60 rad/s.
struct McSystem mc_paper_duffing(void);

// Force F(x, t).
enum McStatus mc_force(const struct McSystem *sys, double x, double t, double *out);

// Potential V(x, t).
enum McStatus mc_potential(const struct McSystem *sys, double x, double t, double *out);

// Steady-state (σₓ², σ_p², C) of the measured second moments for a frozen
// force gradient; the centroid fields of `out` are set to zero.
enum McStatus mc_steady_state_variances(double m,
                                        double d_force,
                                        double k,
                                        double hbar,
                                        struct McGaussianState *out);

// Creates a closure integrator starting from `initial` at t = 0.
enum McStatus mc_closure_new(const struct McSystem *sys,
                             double k,
                             double hbar,
                             double dt,
                             const struct McGaussianState *initial,
                             uint64_t seed,
                             struct McClosure **out);

// Advances `n_steps` steps. On a halt the handle keeps the last good state.
enum McStatus mc_closure_step(struct McClosure *h, uint64_t n_steps);

enum McStatus mc_closure_state(const struct McClosure *h, struct McGaussianState *out, double *t);

void mc_closure_free(struct McClosure *h);

// Creates a wavefunction integrator on `n` points over `[x_min, x_max)`,
// starting from the Gaussian `initial` at t = 0.
enum McStatus mc_sse_new(const struct McSystem *sys,
                         double k,
                         double hbar,
                         double dt,
                         double x_min,
                         double x_max,
                         size_t n,
                         const struct McGaussianState *initial,
                         uint64_t seed,
                         struct McSse **out);

enum McStatus mc_sse_step(struct McSse *h, uint64_t n_steps);

// Moments of the current wavefunction.
enum McStatus mc_sse_moments(const struct McSse *h, struct McGaussianState *out, double *t);

// Copies |ψ(x)|² into `buf` (length `len`, at least the grid size).
enum McStatus mc_sse_density(const struct McSse *h, double *buf, size_t len);

void mc_sse_free(struct McSse *h);

// Parses and validates a JSON configuration document.
enum McStatus mc_config_from_json(const char *text, struct McConfig **out);

// Loads a bundled preset by name.
enum McStatus mc_config_from_preset(const char *name, struct McConfig **out);

enum McStatus mc_config_set_seed(struct McConfig *h, uint64_t seed);

enum McStatus mc_config_set_output(struct McConfig *h, const char *dir);

// Selects the task: "simulate", "lyapunov", "strobe", "wigner-snapshot" or
// "check-classicality".
enum McStatus mc_config_set_task(struct McConfig *h, const char *task);

void mc_config_free(struct McConfig *h);

// Runs the configured task and writes its artifacts and manifest.
enum McStatus mc_run_experiment(const struct McConfig *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEASURED_CHAOS_H */
