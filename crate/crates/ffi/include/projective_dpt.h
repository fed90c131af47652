/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef PROJECTIVE_DPT_H
#define PROJECTIVE_DPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a fallible call.
typedef enum PdptStatus {
  PDPT_STATUS_OK = 0,
  PDPT_STATUS_NULL_POINTER = 1,
  PDPT_STATUS_INVALID_ARGUMENT = 2,
  // `1 + alpha t` is not positive somewhere it is needed.
  PDPT_STATUS_DEGENERATE_MAP = 3,
  PDPT_STATUS_OUT_OF_DOMAIN = 4,
  PDPT_STATUS_NUMERICAL = 5,
  PDPT_STATUS_IO = 6,
  PDPT_STATUS_FORMAT = 7,
  // A Rust panic was caught at the boundary.
  PDPT_STATUS_PANIC = 8,
} PdptStatus;

// A solved gas flow with its stored time levels.
typedef struct PdptFlow PdptFlow;

// A space-time grid `[t_lo, t_hi] x prod [x_lo, x_hi]` of cell centers.
typedef struct PdptGrid PdptGrid;

// A symmetric tensor field sampled on a grid.
typedef struct PdptTensorField PdptTensorField;

// Global quantities of one stored flow level.
typedef struct PdptFunctionals {
  double time;
  double mass;
  double energy;
  // `int rho |x|^2 / 2`
  double inertia;
  // `int p`
  double pressure;
} PdptFunctionals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Release it with
// [`pdpt_string_free`].
char *pdpt_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void pdpt_string_free(char *s);

// Library version as a static string.
const char *pdpt_version(void);

// Creates a grid with `n_t` time cells on `[t_lo, t_hi]` and, for each of
// the `d` space axes, `n_x[k]` cells on `[x_lo[k], x_hi[k]]`.
//
// # Safety
// The three arrays must hold `d` elements; `out` must be writable.
enum PdptStatus pdpt_grid_new(double t_lo,
                              double t_hi,
                              size_t n_t,
                              size_t d,
                              const double *x_lo,
                              const double *x_hi,
                              const size_t *n_x,
                              struct PdptGrid **out);

// # Safety
// `grid` must be NULL or a live handle that is not used afterwards.
void pdpt_grid_free(struct PdptGrid *grid);

// Number of cells, or 0 for NULL.
//
// # Safety
// `grid` must be NULL or a live handle.
size_t pdpt_grid_cells(const struct PdptGrid *grid);

// Space dimension `d`, or 0 for NULL.
//
// # Safety
// `grid` must be NULL or a live handle.
size_t pdpt_grid_dimension(const struct PdptGrid *grid);

// Writes the `d + 1` coordinates `(t, x)` of cell `cell` to `point`.
//
// # Safety
// `point` must hold `len` doubles.
enum PdptStatus pdpt_grid_center(const struct PdptGrid *grid,
                                 size_t cell,
                                 double *point,
                                 size_t len);

// Builds a field from packed cell values, `cells * (d+1)(d+2)/2` doubles.
//
// # Safety
// `data` must hold `len` doubles.
enum PdptStatus pdpt_field_from_packed(const struct PdptGrid *grid,
                                       const double *data,
                                       size_t len,
                                       struct PdptTensorField **out);

// Samples a field by calling `f` at every cell center, in cell order, on
// the calling thread. `f` receives the `n = d + 1` coordinates of the
// point, fills `packed` and returns 0; any other value aborts.
//
// # Safety
// `f` must write `(d+1)(d+2)/2` doubles to `packed`; `user` is passed through.
enum PdptStatus pdpt_field_sample(const struct PdptGrid *grid,
                                  int32_t (*f)(const double *point,
                                               size_t n,
                                               double *packed,
                                               void *user),
                                  void *user,
                                  struct PdptTensorField **out);

// # Safety
// `field` must be NULL or a live handle that is not used afterwards.
void pdpt_field_free(struct PdptTensorField *field);

// Number of cells, or 0 for NULL.
//
// # Safety
// `field` must be NULL or a live handle.
size_t pdpt_field_cells(const struct PdptTensorField *field);

// Packed doubles per cell, `(d+1)(d+2)/2`, or 0 for NULL.
//
// # Safety
// `field` must be NULL or a live handle.
size_t pdpt_field_components(const struct PdptTensorField *field);

// Copies all packed values; `len` must equal cells times components.
//
// # Safety
// `data` must hold `len` doubles.
enum PdptStatus pdpt_field_copy_packed(const struct PdptTensorField *field,
                                       double *data,
                                       size_t len);

// A new handle to a copy of the field's grid.
//
// # Safety
// `out` must be writable.
enum PdptStatus pdpt_field_grid(const struct PdptTensorField *field, struct PdptGrid **out);

// Push-forward under `(t, x) -> (t, x) / (1 + alpha t)`, sampled on the
// image grid with the same cell counts.
//
// # Safety
// `out` must be writable.
enum PdptStatus pdpt_field_push_forward(const struct PdptTensorField *field,
                                        double alpha,
                                        struct PdptTensorField **out);

// Measure norm of the discrete row-wise divergence.
//
// # Safety
// `out` must be writable.
enum PdptStatus pdpt_field_divergence_norm(const struct PdptTensorField *field, double *out);

// Smallest eigenvalue over all cells.
//
// # Safety
// `out` must be writable.
enum PdptStatus pdpt_field_min_eigenvalue(const struct PdptTensorField *field, double *out);

// Writes the field in the binary dump format.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string.
enum PdptStatus pdpt_field_save(const struct PdptTensorField *field, const char *path);

// Reads a field written by [`pdpt_field_save`] or the command line tool.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
enum PdptStatus pdpt_field_load(const char *path, struct PdptTensorField **out);

// Transforms one tensor value at the space-time point `point` (`n`
// coordinates). Writes the image point and the packed image tensor.
//
// # Safety
// `point` and `point_out` hold `n` doubles, `packed` and `packed_out`
// hold `n(n+1)/2`.
enum PdptStatus pdpt_push_forward_value(double alpha,
                                        const double *point,
                                        size_t n,
                                        const double *packed,
                                        double *point_out,
                                        double *packed_out);

// Solves the problem described by `json`, using the same schema as the
// `problem` block of a campaign file.
//
// # Safety
// `json` must be a NUL-terminated UTF-8 string; `out` must be writable.
enum PdptStatus pdpt_flow_solve_json(const char *json, struct PdptFlow **out);

// # Safety
// `flow` must be NULL or a live handle that is not used afterwards.
void pdpt_flow_free(struct PdptFlow *flow);

// Number of stored time levels, or 0 for NULL.
//
// # Safety
// `flow` must be NULL or a live handle.
size_t pdpt_flow_levels(const struct PdptFlow *flow);

// Global quantities at stored level `level`.
//
// # Safety
// `out` must be writable.
enum PdptStatus pdpt_flow_functionals(const struct PdptFlow *flow,
                                      size_t level,
                                      struct PdptFunctionals *out);

// The space-time mass-momentum tensor of the flow on its level grid.
//
// # Safety
// `out` must be writable.
enum PdptStatus pdpt_flow_tensor(const struct PdptFlow *flow, struct PdptTensorField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROJECTIVE_DPT_H */
