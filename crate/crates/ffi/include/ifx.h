#ifndef IFX_H
#define IFX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum IfxFamily {
  IFX_FAMILY_RTREE = 0,
  IFX_FAMILY_KDTREE = 1,
  // Quadtree in 2D, octree in 3D.
  IFX_FAMILY_QUADTREE = 2,
} IfxFamily;

typedef enum IfxStatus {
  IFX_STATUS_OK = 0,
  IFX_STATUS_NULL_POINTER = 1,
  IFX_STATUS_INVALID_ARGUMENT = 2,
  IFX_STATUS_UNSUPPORTED_DIMS = 3,
  IFX_STATUS_DIMENSION_MISMATCH = 4,
  // The output buffer is too small; `out_count` holds the required size.
  IFX_STATUS_BUFFER_TOO_SMALL = 5,
  IFX_STATUS_IO = 6,
  IFX_STATUS_FORMAT = 7,
  IFX_STATUS_INTERNAL = 8,
} IfxStatus;

typedef enum IfxStrategy {
  IFX_STRATEGY_BINARY = 0,
  IFX_STRATEGY_LINEAR = 1,
  IFX_STRATEGY_EXPONENTIAL = 2,
} IfxStrategy;

// Opaque index handle.
typedef struct IfxIndex IfxIndex;

// Build parameters. Enum-valued fields are plain integers so that an
// out-of-range value is reported instead of being undefined behaviour.
typedef struct IfxBuildOptions {
  // One of `IfxFamily`.
  uint32_t family;
  bool learned;
  size_t leaf_capacity;
  // R-tree internal node capacity; 0 uses the leaf capacity.
  size_t internal_fanout;
  // One of `IfxStrategy`.
  uint32_t strategy;
  // Quadtree/octree depth limit; 0 uses the default.
  size_t max_depth;
} IfxBuildOptions;

typedef struct IfxFootprint {
  size_t internal_bytes;
  size_t leaf_header_bytes;
  size_t total_bytes;
} IfxFootprint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Fills `opts` with defaults: plain R-tree, leaf capacity 256, binary search.
//
// # Safety
// `opts` must be null or point to writable memory for one `IfxBuildOptions`.
enum IfxStatus ifx_build_options_default(struct IfxBuildOptions *opts);

// Builds an index over `n_points` points of `dims` (2 or 3) interleaved
// coordinates. `ids` may be null, in which case point `i` gets id `i`.
//
// # Safety
// `coords` must point to `n_points * dims` floats, `ids` (if not null) to
// `n_points` integers, `opts` to one options struct, and `out` to writable
// storage for a handle.
enum IfxStatus ifx_build(size_t dims,
                         const float *coords,
                         size_t n_points,
                         const uint32_t *ids,
                         const struct IfxBuildOptions *opts,
                         struct IfxIndex **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `index` must be null or a handle from this library not yet freed.
void ifx_index_free(struct IfxIndex *index);

// Number of indexed points, 0 for a null handle.
//
// # Safety
// `index` must be null or a live handle.
size_t ifx_index_len(const struct IfxIndex *index);

// Dimensionality, 0 for a null handle.
//
// # Safety
// `index` must be null or a live handle.
size_t ifx_index_dims(const struct IfxIndex *index);

// Bytes of internal nodes and leaf headers (record storage excluded).
//
// # Safety
// `index` must be a live handle and `out` writable.
enum IfxStatus ifx_index_footprint(const struct IfxIndex *index, struct IfxFootprint *out);

// Ids of all points equal to `point` (`dims` floats).
//
// On `IFX_STATUS_BUFFER_TOO_SMALL` the first `capacity` ids are written and
// `out_count` holds the total, so callers can retry with a larger buffer.
// Passing `capacity == 0` (and a null `out_ids`) just counts.
//
// # Safety
// `index` must be a live handle, `point` must point to `dims` floats,
// `out_ids` to `capacity` writable slots and `out_count` must be writable.
enum IfxStatus ifx_point_query(const struct IfxIndex *index,
                               const float *point,
                               size_t dims,
                               uint32_t *out_ids,
                               size_t capacity,
                               size_t *out_count);

// Ids of all points inside the closed box `[lo, hi]`. Buffer handling as in
// `ifx_point_query`.
//
// # Safety
// As for `ifx_point_query`, with `lo` and `hi` each pointing to `dims` floats.
enum IfxStatus ifx_range_query(const struct IfxIndex *index,
                               const float *lo,
                               const float *hi,
                               size_t dims,
                               uint32_t *out_ids,
                               size_t capacity,
                               size_t *out_count);

// Writes a snapshot of the index to `path`.
//
// # Safety
// `index` must be a live handle and `path` a NUL-terminated string.
enum IfxStatus ifx_index_save(const struct IfxIndex *index, const char *path);

// Loads a snapshot written by `ifx_index_save`. The file is validated; a
// corrupt snapshot yields `IFX_STATUS_FORMAT`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum IfxStatus ifx_index_load(const char *path, struct IfxIndex **out);

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *ifx_last_error(void);

// Static name of a status code.
const char *ifx_status_str(enum IfxStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IFX_H */
