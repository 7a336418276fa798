#ifndef DDNET_H
#define DDNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum DdnetStatus {
  DDNET_STATUS_OK = 0,
  DDNET_STATUS_NULL_POINTER = 1,
  DDNET_STATUS_INVALID_ARGUMENT = 2,
  DDNET_STATUS_INVALID_INPUT = 3,
  DDNET_STATUS_SHAPE = 4,
  DDNET_STATUS_IO = 5,
  DDNET_STATUS_PARSE = 6,
  DDNET_STATUS_CORRUPT = 7,
  DDNET_STATUS_VERSION = 8,
  DDNET_STATUS_INCOMPATIBLE = 9,
  DDNET_STATUS_BUFFER_TOO_SMALL = 10,
  DDNET_STATUS_INTERNAL = 11,
} DdnetStatus;

// Opaque model handle.
typedef struct DdnetModel DdnetModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a randomly initialized model using the default temporal length.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum DdnetStatus ddnet_model_new(uint32_t num_joints,
                                 uint32_t coord_dim,
                                 uint32_t num_classes,
                                 uint32_t filters,
                                 uint64_t seed,
                                 struct DdnetModel **out);

// Loads a weight file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum DdnetStatus ddnet_model_load(const char *path, struct DdnetModel **out);

// Writes a weight file.
//
// # Safety
// `model` must be a live handle and `path` a NUL-terminated string.
enum DdnetStatus ddnet_model_save(const struct DdnetModel *model, const char *path);

// Releases a handle. Null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void ddnet_model_free(struct DdnetModel *model);

// Number of output classes, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uint32_t ddnet_model_num_classes(const struct DdnetModel *model);

// Joints per frame expected by the model, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uint32_t ddnet_model_num_joints(const struct DdnetModel *model);

// Coordinates per joint expected by the model, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uint32_t ddnet_model_coord_dim(const struct DdnetModel *model);

// Trainable parameter count, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uint64_t ddnet_model_param_count(const struct DdnetModel *model);

// Classifies one sequence.
//
// Writes the predicted class to `class_out` and, when `probs_out` is not
// null, the softmax distribution to `probs_out[0..num_classes]`.
//
// # Safety
// `coords` must point to `frames * num_joints * coord_dim` floats,
// `class_out` must be valid, and `probs_out` null or valid for `probs_len` floats.
enum DdnetStatus ddnet_model_predict(const struct DdnetModel *model,
                                     const float *coords,
                                     uintptr_t frames,
                                     uint32_t num_joints,
                                     uint32_t coord_dim,
                                     uint32_t *class_out,
                                     float *probs_out,
                                     uintptr_t probs_len);

// Pairwise joint distances of one frame into `out[0..N(N-1)/2]`.
//
// # Safety
// `coords` must point to `num_joints * coord_dim` floats and `out` to `out_len` floats.
enum DdnetStatus ddnet_compute_jcd(const float *coords,
                                   uint32_t num_joints,
                                   uint32_t coord_dim,
                                   float *out,
                                   uintptr_t out_len);

// Temporal length sequences are resampled to by default.
uint32_t ddnet_default_frames(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length including the NUL,
// or 0 when no error has been recorded. `buf` may be null to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t ddnet_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *ddnet_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDNET_H */
