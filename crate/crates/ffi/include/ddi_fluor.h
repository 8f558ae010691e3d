#ifndef DDI_FLUOR_H
#define DDI_FLUOR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Most ambiguity branches any estimator reports.
 */
#define DDI_MAX_AMBIGUITY 16

typedef enum DdiStatus {
  DDI_STATUS_OK = 0,
  DDI_STATUS_NULL_POINTER = 1,
  DDI_STATUS_INVALID_ARGUMENT = 2,
  DDI_STATUS_NO_RADIATION = 3,
  DDI_STATUS_NUMERICAL = 4,
  DDI_STATUS_NO_SPLITTING = 5,
  DDI_STATUS_INCONSISTENT_INPUT = 6,
  DDI_STATUS_INSUFFICIENT_SCAN = 7,
  DDI_STATUS_BUFFER_TOO_SMALL = 8,
  DDI_STATUS_PANIC = 9,
} DdiStatus;

typedef enum DdiChannel {
  DDI_CHANNEL_PI = 0,
  DDI_CHANNEL_SIGMA = 1,
  DDI_CHANNEL_TOTAL = 2,
} DdiChannel;

typedef enum DdiMethod {
  DDI_METHOD_RABI_INVERSION = 0,
  DDI_METHOD_DOUBLET_SPLIT = 1,
  DDI_METHOD_SMALL_R_PEAKS = 2,
  DDI_METHOD_PHI_FORMULA = 3,
  DDI_METHOD_THETA_SCAN = 4,
} DdiMethod;

/**
 * Opaque forward model: couplings, Liouvillian and steady state.
 */
typedef struct DdiSystem DdiSystem;

/**
 * Coupling tables, row-major 3×3, real and imaginary parts split.
 */
typedef struct DdiCouplings {
  double omega_re[9];
  double omega_im[9];
  double gamma_re[9];
  double gamma_im[9];
  double rabi1;
  double rabi2;
  double eta;
} DdiCouplings;

typedef struct DdiDetector {
  /**
   * Unit vector towards the detector.
   */
  double direction[3];
  enum DdiChannel channel;
  bool include_position_phase;
} DdiDetector;

typedef struct DdiEstimate {
  enum DdiMethod method;
  double value;
  double residual;
  double ambiguity[DDI_MAX_AMBIGUITY];
  size_t ambiguity_count;
  /**
   * Number of advisory flags raised; non-zero means the value should be
   * treated with caution.
   */
  size_t flag_count;
} DdiEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ddi_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in bytes,
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ddi_last_error_message(char *buf, size_t len);

/**
 * Builds the forward model and solves for the steady state.
 *
 * `r1` (3 values, atom 1 position in wavelengths) and `detunings`
 * (Δ1, Δ2, Δ3 in γ) may be null for the defaults.
 *
 * # Safety
 * Non-null pointers must be valid for the stated lengths; `out` must be
 * writable.
 */
enum DdiStatus ddi_system_new(double r,
                              double theta,
                              double phi,
                              double omega,
                              const double *r1,
                              const double *detunings,
                              struct DdiSystem **out);

/**
 * Releases a system; null is ignored.
 *
 * # Safety
 * `sys` must be null or a handle from [`ddi_system_new`] not yet freed.
 */
void ddi_system_free(struct DdiSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum DdiStatus ddi_system_couplings(const struct DdiSystem *sys, struct DdiCouplings *out);

/**
 * Steady-state density matrix (16×16, row-major, basis index
 * `4(i−1) + (j−1)` for atom 1 in `|i⟩`, atom 2 in `|j⟩`). `degenerate` may be
 * null.
 *
 * # Safety
 * `sys` must be a live handle; `re` and `im` must hold 256 values each.
 */
enum DdiStatus ddi_system_density_matrix(const struct DdiSystem *sys,
                                         double *re,
                                         double *im,
                                         bool *degenerate);

/**
 * Steady-state population of `level` (1–4) of `atom` (1 or 2).
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum DdiStatus ddi_system_population(const struct DdiSystem *sys,
                                     uint32_t atom,
                                     uint32_t level,
                                     double *out);

/**
 * Total steady-state intensity seen by `det`.
 *
 * # Safety
 * `sys` must be a live handle; `det` readable; `out` writable.
 */
enum DdiStatus ddi_system_intensity(const struct DdiSystem *sys,
                                    const struct DdiDetector *det,
                                    double *out);

/**
 * Incoherent spectrum at `n` detunings (units of γ); `out` receives `n`
 * unnormalized values.
 *
 * # Safety
 * `sys` must be a live handle; `det` readable; `grid` and `out` must hold
 * `n` values.
 */
enum DdiStatus ddi_system_spectrum(const struct DdiSystem *sys,
                                   const struct DdiDetector *det,
                                   const double *grid,
                                   size_t n,
                                   double *out);

/**
 * σ intensity along `+z` as the pair is rotated to `θ = Δθ` for each of the
 * `n` angles in `dtheta`.
 *
 * # Safety
 * `dtheta` and `out` must hold `n` values.
 */
enum DdiStatus ddi_sigma_scan(double r,
                              double phi,
                              double omega,
                              const double *dtheta,
                              size_t n,
                              double *out);

/**
 * Peaks of a sampled spectrum. Writes up to `capacity` positions (and
 * heights, if `heights` is non-null) and the number found to `count`;
 * returns `BufferTooSmall` when `capacity` is insufficient.
 *
 * # Safety
 * `grid` and `values` must hold `n` values; `positions` (and non-null
 * `heights`) must hold `capacity` values; `count` must be writable.
 */
enum DdiStatus ddi_detect_peaks(const double *grid,
                                const double *values,
                                size_t n,
                                double prominence,
                                double *positions,
                                double *heights,
                                size_t capacity,
                                size_t *count);

/**
 * Separation from a weak-drive, coupling-dominated peak set. `heights` may
 * be null.
 *
 * # Safety
 * `positions` and non-null `heights` must hold `n` values; `out` writable.
 */
enum DdiStatus ddi_estimate_distance_small(const double *positions,
                                           const double *heights,
                                           size_t n,
                                           struct DdiEstimate *out);

/**
 * In-plane azimuth from the sideband doublets of a strongly driven pair
 * with known separation `r_known`.
 *
 * # Safety
 * `positions` and non-null `heights` must hold `n` values; `out` writable.
 */
enum DdiStatus ddi_estimate_phi(const double *positions,
                                const double *heights,
                                size_t n,
                                double omega,
                                double r_known,
                                struct DdiEstimate *out);

/**
 * Orientation offset from a σ-intensity rotation scan.
 *
 * # Safety
 * `dtheta` and `intensity` must hold `n` values; `out` writable.
 */
enum DdiStatus ddi_estimate_theta(const double *dtheta,
                                  const double *intensity,
                                  size_t n,
                                  struct DdiEstimate *out);

/**
 * Describes a status code as a static NUL-terminated string.
 */
const char *ddi_status_name(enum DdiStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDI_FLUOR_H */
