/* C interface for entanglib. Generated by cbindgen; do not edit. */

#ifndef ENTANGLIB_H
#define ENTANGLIB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call completed successfully.
#define ENT_OK 0

// A required pointer argument was null.
#define ENT_ERR_NULL 1

// An argument was out of range or otherwise invalid.
#define ENT_ERR_INVALID 2

// A buffer length did not match the expected element count.
#define ENT_ERR_LENGTH 3

// The input failed density-matrix validation.
#define ENT_ERR_NOT_DENSITY 4

// A numeric routine failed or panicked.
#define ENT_ERR_NUMERIC 5

// Opaque handle for a validated bipartite density matrix.
typedef struct EntState EntState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *ent_version(void);

// Static description of a status code.
const char *ent_strerror(int32_t code);

// Build a state handle from `2*(dim_a*dim_b)^2` doubles, row-major with
// interleaved re/im parts; writes the new handle to `out` on success.
int32_t ent_state_new(size_t dim_a,
                      size_t dim_b,
                      const double *re_im,
                      size_t len,
                      struct EntState **out);

// Release a handle; null is ignored.
void ent_state_free(struct EntState *state);

// Write the subsystem dimensions of `state` to `dim_a` and `dim_b`.
int32_t ent_state_dims(const struct EntState *state, size_t *dim_a, size_t *dim_b);

// Copy the matrix into `out` as interleaved re/im doubles; `len` must be
// `2*(dim_a*dim_b)^2`.
int32_t ent_state_data(const struct EntState *state, double *out, size_t len);

// Reduce onto one party: nonzero `keep_a` keeps A, zero keeps B. The
// result is a fresh single-party handle with dim_b = 1.
int32_t ent_partial_trace(const struct EntState *state, int32_t keep_a, struct EntState **out);

// Von Neumann entropy of the state in bits.
int32_t ent_von_neumann_entropy(const struct EntState *state, double *out);

// Coherent information S(rho_A) - S(rho) in bits.
int32_t ent_coherent_information(const struct EntState *state, double *out);

// Moment Tr(rho^order) for integer `order >= 1`.
int32_t ent_moment(const struct EntState *state, uint32_t order, double *out);

// Relative-entropy-of-entanglement upper bound in bits. Zero `restarts`
// or `max_iters` selects the built-in defaults for the state dimension.
int32_t ent_ree_upper_bound(const struct EntState *state,
                            uint64_t seed,
                            size_t restarts,
                            size_t max_iters,
                            double *out);

// Joint outcome probabilities under the fixed CGLMP bases at
// `n_settings` settings per party, in (x, y, a, b) lexicographic order;
// requires equal local dimensions and `len == n_settings^2 * d^2`.
int32_t ent_cglmp_correlations(const struct EntState *state,
                               size_t n_settings,
                               double *out,
                               size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTANGLIB_H */
