#ifndef PRIVCC_H
#define PRIVCC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PRIVCC_STATUS_OK = 0,
  PRIVCC_STATUS_NULL_POINTER = 1,
  PRIVCC_STATUS_PARSE = 2,
  PRIVCC_STATUS_INVALID_ARGUMENT = 3,
  PRIVCC_STATUS_TOO_LARGE = 4,
  PRIVCC_STATUS_IO = 5,
  PRIVCC_STATUS_BUFFER_TOO_SMALL = 6,
  PRIVCC_STATUS_INTERNAL = 7,
} PrivccStatus;

/**
 * A clustering with per-vertex light-singleton flags.
 */
typedef struct PrivccClustering PrivccClustering;

/**
 * A signed graph given by its `+` edges.
 */
typedef struct PrivccGraph PrivccGraph;

/**
 * Derived privacy parameters.
 */
typedef struct PrivccParams PrivccParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *privcc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *privcc_version(void);

/**
 * Builds a graph on `n` vertices from `m` edges `(us[i], vs[i])`.
 *
 * # Safety
 * `us` and `vs` must each point to `m` readable values (may be null when
 * `m == 0`); `out` must be writable.
 */
PrivccStatus privcc_graph_new(size_t n,
                              const uint32_t *us,
                              const uint32_t *vs,
                              size_t m,
                              PrivccGraph **out);

/**
 * Loads an edge-list file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
PrivccStatus privcc_graph_load(const char *path, PrivccGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from this library not yet freed.
 */
void privcc_graph_free(PrivccGraph *g);

/**
 * # Safety
 * `g` must be a live handle.
 */
size_t privcc_graph_num_vertices(const PrivccGraph *g);

/**
 * # Safety
 * `g` must be a live handle.
 */
size_t privcc_graph_num_edges(const PrivccGraph *g);

/**
 * Derives parameters for `(epsilon, delta)` with agreement and lightness
 * thresholds `beta` and `lambda`.
 *
 * # Safety
 * `out` must be writable.
 */
PrivccStatus privcc_params_derive(double epsilon,
                                  double delta,
                                  double beta,
                                  double lambda,
                                  PrivccParams **out);

/**
 * Sets the noise multiplier. Any value other than 1 makes runs non-private.
 *
 * # Safety
 * `p` must be a live handle.
 */
PrivccStatus privcc_params_set_noise_multiplier(PrivccParams *p, double s);

/**
 * Overrides T0; a negative value restores the derived one. Overrides make
 * runs non-private.
 *
 * # Safety
 * `p` must be a live handle.
 */
PrivccStatus privcc_params_set_t0_override(PrivccParams *p, double t0);

/**
 * Effective degree threshold T0, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
double privcc_params_t0(const PrivccParams *p);

/**
 * 1 when the parameters no longer carry the privacy guarantee.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
bool privcc_params_non_private(const PrivccParams *p);

/**
 * # Safety
 * `p` must be null or a handle from this library not yet freed.
 */
void privcc_params_free(PrivccParams *p);

/**
 * Runs the private pipeline.
 *
 * # Safety
 * `g` and `p` must be live handles; `out` must be writable.
 */
PrivccStatus privcc_cluster(const PrivccGraph *g,
                            const PrivccParams *p,
                            uint64_t seed,
                            PrivccClustering **out);

/**
 * Runs the non-private reference procedure with constant thresholds.
 * With `light_singletons == false` light vertices stay in their component.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
PrivccStatus privcc_refcc(const PrivccGraph *g,
                          double beta,
                          double lambda,
                          bool light_singletons,
                          PrivccClustering **out);

/**
 * Builds a clustering from `n` labels.
 *
 * # Safety
 * `labels` must point to `n` readable values; `out` must be writable.
 */
PrivccStatus privcc_clustering_from_labels(const uint64_t *labels,
                                           size_t n,
                                           PrivccClustering **out);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t privcc_clustering_len(const PrivccClustering *c);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t privcc_clustering_num_clusters(const PrivccClustering *c);

/**
 * Copies cluster labels into `buf`, which must hold at least
 * `privcc_clustering_len` entries.
 *
 * # Safety
 * `c` must be a live handle; `buf` must point to `cap` writable values.
 */
PrivccStatus privcc_clustering_labels(const PrivccClustering *c, uint64_t *buf, size_t cap);

/**
 * Copies light-singleton flags (0 or 1) into `buf`.
 *
 * # Safety
 * `c` must be a live handle; `buf` must point to `cap` writable bytes.
 */
PrivccStatus privcc_clustering_light(const PrivccClustering *c, uint8_t *buf, size_t cap);

/**
 * # Safety
 * `c` must be null or a handle from this library not yet freed.
 */
void privcc_clustering_free(PrivccClustering *c);

/**
 * Disagreement cost of `c` on `g`.
 *
 * # Safety
 * `g` and `c` must be live handles; `out` must be writable.
 */
PrivccStatus privcc_cost(const PrivccGraph *g, const PrivccClustering *c, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIVCC_H */
