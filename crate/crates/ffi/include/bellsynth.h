#ifndef BELLSYNTH_H
#define BELLSYNTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_ARGUMENT = 2,
  BS_STATUS_CONFIG = 3,
  BS_STATUS_DOMAIN = 4,
  BS_STATUS_RESOLUTION = 5,
  BS_STATUS_RANGE = 6,
  BS_STATUS_MISUSE = 7,
  BS_STATUS_CONTRACT = 8,
  BS_STATUS_INVARIANT_VIOLATION = 9,
  BS_STATUS_UNDEFINED_VISIBILITY = 10,
  BS_STATUS_IO = 11,
  BS_STATUS_INTERNAL = 12,
  BS_STATUS_PANIC = 13,
} BsStatus;

typedef enum {
  /**
   * cw 351.1 nm pump, 3 mm BBO, no filters.
   */
  BS_PRESET_CW_REFERENCE = 0,
  /**
   * 390 nm pump with 2 nm bandwidth, 3 mm BBO, 20 nm filters.
   */
  BS_PRESET_PULSED_REFERENCE = 1,
} BsPreset;

/**
 * Two-photon amplitude on its time grid.
 */
typedef struct BsBiphoton BsBiphoton;

/**
 * Two-qubit density matrix over HH, HV, VH, VV.
 */
typedef struct BsState BsState;

typedef struct {
  double concurrence;
  double entanglement_of_formation;
  double normalized_entropy;
  double purity;
} BsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t bs_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bs_version(void);

/**
 * ε|Φ_φ⟩⟨Φ_φ| + (1 − ε)·(|HH⟩⟨HH| + |VV⟩⟨VV|)/2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
BsStatus bs_state_partial(double epsilon, double phi, BsState **out);

/**
 * Builds a state from row-major real and imaginary parts (16 values each).
 *
 * # Safety
 * `re` and `im` must point to 16 doubles; `out` must be valid.
 */
BsStatus bs_state_from_matrix(const double *re, const double *im, BsState **out);

/**
 * # Safety
 * `state` must be a live handle; `re`/`im` valid pointers.
 */
BsStatus bs_state_element(const BsState *state,
                          uintptr_t row,
                          uintptr_t col,
                          double *re,
                          double *im);

/**
 * # Safety
 * `state` must be a live handle; `out` a valid pointer.
 */
BsStatus bs_state_metrics(const BsState *state, BsMetrics *out);

/**
 * Probability that both photons pass linear analyzers at the given angles.
 *
 * # Safety
 * `state` must be a live handle; `out` a valid pointer.
 */
BsStatus bs_state_coincidence_probability(const BsState *state,
                                          double theta1_deg,
                                          double theta2_deg,
                                          double *out);

/**
 * # Safety
 * `state` must be null or a handle not freed before.
 */
void bs_state_free(BsState *state);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
BsStatus bs_biphoton_preset(BsPreset preset, BsBiphoton **out);

/**
 * Builds the amplitude from the crystal, pump, filter, grid and phase keys
 * of a configuration text (same format as the command-line config files).
 *
 * # Safety
 * `config_text` must be a NUL-terminated string; `out` a valid pointer.
 */
BsStatus bs_biphoton_from_config(const char *config_text, BsBiphoton **out);

/**
 * o/e walk-off D·L in fs.
 *
 * # Safety
 * `pi` must be a live handle; `out` a valid pointer.
 */
BsStatus bs_biphoton_walkoff_fs(const BsBiphoton *pi, double *out);

/**
 * Grid sizes and the relative-time step.
 *
 * # Safety
 * `pi` must be a live handle; out pointers valid.
 */
BsStatus bs_biphoton_grid(const BsBiphoton *pi,
                          uintptr_t *n_plus,
                          uintptr_t *n_minus,
                          double *dt_minus_fs);

/**
 * Normalized coincidence rate (1 at zero delay, 45°/45°, φ = 0).
 *
 * # Safety
 * `pi` must be a live handle; `out` a valid pointer.
 */
BsStatus bs_coincidence_rate(const BsBiphoton *pi,
                             double tau_fs,
                             double theta1_deg,
                             double theta2_deg,
                             double phi,
                             double *out);

/**
 * # Safety
 * `pi` must be a live handle; `out` a valid pointer.
 */
BsStatus bs_werner_epsilon(const BsBiphoton *pi, double tau_fs, double *out);

/**
 * Polarization state after the concentrator at delay `tau_fs`.
 *
 * # Safety
 * `pi` must be a live handle; `out` a valid pointer.
 */
BsStatus bs_output_state(const BsBiphoton *pi, double tau_fs, double phi, BsState **out);

/**
 * # Safety
 * `pi` must be null or a handle not freed before.
 */
void bs_biphoton_free(BsBiphoton *pi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BELLSYNTH_H */
