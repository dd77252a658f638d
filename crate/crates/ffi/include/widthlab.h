#ifndef WIDTHLAB_H
#define WIDTHLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Relative slack used by `wl_witness_verify`.
#define WL_WITNESS_TOL 1e-9

typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_NULL_POINTER = 1,
  WL_STATUS_INVALID_PARAMETER = 2,
  WL_STATUS_OUTSIDE_DOMAIN = 3,
  WL_STATUS_SHAPE_MISMATCH = 4,
  WL_STATUS_NON_CONVERGENCE = 5,
  WL_STATUS_NO_WITNESS = 6,
  WL_STATUS_PROPERTY_FAILURE = 7,
  WL_STATUS_BUFFER_TOO_SMALL = 8,
  WL_STATUS_PANIC = 9,
} WlStatus;

// Query under construction; balls are added one at a time.
typedef struct WlQuery WlQuery;

typedef struct WlWitness WlWitness;

// Library version as a static NUL-terminated string.
const char *wl_version(void);

// Copies the last error of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 when there is
// no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t wl_last_error_message(char *buf, size_t len);

// New query without balls. Pass `INFINITY` for an infinite exponent.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum WlStatus wl_query_new(size_t m,
                           size_t k,
                           uint64_t n,
                           double q,
                           double sigma,
                           struct WlQuery **out);

// Query from one JSON query record (`{"m":..,"k":..,"n":..,"q":..,
// "sigma":..,"balls":[{"nu":..,"p":..,"theta":..}]}`).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum WlStatus wl_query_from_json(const char *json, struct WlQuery **out);

// Appends the ball `nu·B_{p,θ}`; at most two balls.
//
// # Safety
// `q` must be a live handle from `wl_query_new`.
enum WlStatus wl_query_add_ball(struct WlQuery *q, double nu, double p, double theta);

// # Safety
// `q` must be null or a live handle; it is invalid afterwards.
void wl_query_free(struct WlQuery *q);

// `λ_{p,q}`.
//
// # Safety
// `out` must be a valid pointer.
enum WlStatus wl_lambda_pq(double p, double q, double *out);

// `Φ_1..Φ_5` into `out[0..5]`; absent terms are `INFINITY`.
//
// # Safety
// `q` must be a live handle and `out` point to five doubles.
enum WlStatus wl_phi_all(const struct WlQuery *q, double *out);

// Order estimate and the index of the active term (1 for one ball).
//
// # Safety
// `q` must be a live handle; `value` and `argmin` valid pointers.
enum WlStatus wl_estimate(const struct WlQuery *q, double *value, uint32_t *argmin);

// Predicted active term of a two-ball query; `boundary` is set to 1 on a
// regime or band boundary where ties are expected.
//
// # Safety
// `q` must be a live handle; `j` and `boundary` valid pointers.
enum WlStatus wl_predict(const struct WlQuery *q, uint32_t *j, int *boundary);

// Builds the lower-bound witness (full orbit when it has at most 200000
// vertices, else `samples` vertices drawn with `seed`). Returns
// `NO_WITNESS` when the predicted band has no construction.
//
// # Safety
// `q` must be a live handle and `out` a valid pointer.
enum WlStatus wl_witness_build(const struct WlQuery *q,
                               size_t samples,
                               uint64_t seed,
                               struct WlWitness **out);

// Scale `c`, block sizes `r`, `l` and the claimed lower value.
//
// # Safety
// `w` must be a live handle; the out pointers may be null.
enum WlStatus wl_witness_info(const struct WlWitness *w,
                              double *scale,
                              size_t *r,
                              size_t *l,
                              double *claimed);

// Multiplies the witness scale by `factor` (for negative controls).
//
// # Safety
// `w` must be a live handle.
enum WlStatus wl_witness_rescale(struct WlWitness *w, double factor);

// Checks every visited vertex against both balls. Returns
// `PROPERTY_FAILURE` (with the offending vertex in the error message) when
// an inclusion fails; `worst_ratio` is written either way.
//
// # Safety
// `w` must be a live handle; `worst_ratio` may be null.
enum WlStatus wl_witness_verify(const struct WlWitness *w, double *worst_ratio);

// Witness document (JSON, version 1) after verification; free the string
// with `wl_string_free`.
//
// # Safety
// `w` must be a live handle and `out` a valid pointer.
enum WlStatus wl_witness_to_json(const struct WlWitness *w, char **out);

// # Safety
// `w` must be null or a live handle; it is invalid afterwards.
void wl_witness_free(struct WlWitness *w);

// Runs a property suite by name; `cases == 0` keeps the default count.
// `report` (may be null) receives the JSON report, freed with
// `wl_string_free`. Returns `PROPERTY_FAILURE` when the suite fails.
//
// # Safety
// `name` must be a NUL-terminated string; `report` null or valid.
enum WlStatus wl_verify_suite(const char *name, uint64_t seed, size_t cases, char **report);

// Frees a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void wl_string_free(char *s);

#endif  /* WIDTHLAB_H */
