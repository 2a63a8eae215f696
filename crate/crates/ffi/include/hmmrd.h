#ifndef HMMRD_H
#define HMMRD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HmmrdStatus {
  HMMRD_STATUS_OK = 0,
  HMMRD_STATUS_NULL_POINTER = 1,
  HMMRD_STATUS_INVALID_ARGUMENT = 2,
  HMMRD_STATUS_PARSE_ERROR = 3,
  HMMRD_STATUS_TOPOLOGY_ERROR = 4,
  HMMRD_STATUS_NEWTON_DIVERGED = 5,
  HMMRD_STATUS_LINEAR_SOLVE_FAILED = 6,
  HMMRD_STATUS_IO_ERROR = 7,
  HMMRD_STATUS_BUFFER_TOO_SMALL = 8,
  HMMRD_STATUS_PANIC = 9,
  HMMRD_STATUS_OTHER = 10,
} HmmrdStatus;

/**
 * Opaque mesh handle.
 */
typedef struct HmmrdMesh HmmrdMesh;

/**
 * Opaque transient solver handle for the manufactured Brusselator problem.
 */
typedef struct HmmrdSolver HmmrdSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *hmmrd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hmmrd_version(void);

/**
 * Structured triangulation of the unit square with `2 n^2` cells.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HmmrdStatus hmmrd_mesh_structured(size_t n, struct HmmrdMesh **out);

/**
 * Mesh from the text format (`vertices N` / `cells M` blocks).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum HmmrdStatus hmmrd_mesh_load(const char *text, struct HmmrdMesh **out);

/**
 * # Safety
 * `mesh` must come from this library and not be used afterwards. Null is a no-op.
 */
void hmmrd_mesh_free(struct HmmrdMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle; the out pointers may be null to skip.
 */
enum HmmrdStatus hmmrd_mesh_counts(const struct HmmrdMesh *mesh,
                                   size_t *cells,
                                   size_t *faces,
                                   size_t *vertices);

/**
 * Largest cell diameter.
 *
 * # Safety
 * `mesh` must be a live handle and `h` writable.
 */
enum HmmrdStatus hmmrd_mesh_size(const struct HmmrdMesh *mesh, double *h);

/**
 * Solver for the manufactured Brusselator problem on `mesh`, at `t = 0`.
 * The mesh handle may be freed afterwards.
 *
 * # Safety
 * `mesh` must be a live handle and `out` writable.
 */
enum HmmrdStatus hmmrd_solver_new(const struct HmmrdMesh *mesh,
                                  double a,
                                  double b,
                                  double mu1,
                                  double mu2,
                                  struct HmmrdSolver **out);

/**
 * # Safety
 * `solver` must come from this library and not be used afterwards. Null is a no-op.
 */
void hmmrd_solver_free(struct HmmrdSolver *solver);

/**
 * Advances by `steps` implicit Euler steps of length `dt`. On failure the
 * solver keeps the last successful level.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum HmmrdStatus hmmrd_solver_advance(struct HmmrdSolver *solver, double dt, size_t steps);

/**
 * Runs from the current time to `t_final` with steps of about `dt`.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum HmmrdStatus hmmrd_solver_run(struct HmmrdSolver *solver, double dt, double t_final);

/**
 * # Safety
 * `solver` must be a live handle and `t` writable.
 */
enum HmmrdStatus hmmrd_solver_time(const struct HmmrdSolver *solver, double *t);

/**
 * Relative errors against the manufactured solution at the current time.
 *
 * # Safety
 * `solver` must be a live handle; out pointers may be null to skip.
 */
enum HmmrdStatus hmmrd_solver_errors(const struct HmmrdSolver *solver,
                                     double *err_u,
                                     double *err_v,
                                     double *err_grad_u,
                                     double *err_grad_v);

/**
 * Copies the cell values of species `species` (0 = u, 1 = v) into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum HmmrdStatus hmmrd_solver_cell_values(const struct HmmrdSolver *solver,
                                          uint32_t species,
                                          double *buf,
                                          size_t len);

/**
 * Coercivity constant, consistency defect of `sin(pi x) sin(pi y)` and
 * limit-conformity defect of `(x, 0)` on `mesh`.
 *
 * # Safety
 * `mesh` must be a live handle; out pointers may be null to skip.
 */
enum HmmrdStatus hmmrd_diagnose(const struct HmmrdMesh *mesh,
                                double *c_d,
                                double *s_d,
                                double *w_d);

/**
 * `log(e_coarse / e_fine) / log(h_coarse / h_fine)`
 *
 * # Safety
 * `out` must be writable.
 */
enum HmmrdStatus hmmrd_convergence_rate(double e_coarse,
                                        double e_fine,
                                        double h_coarse,
                                        double h_fine,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HMMRD_H */
