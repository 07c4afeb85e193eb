/* C interface to the qrtan library. Generated by cbindgen; do not edit. */

#ifndef QRTAN_H
#define QRTAN_H

#include <stddef.h>
#include <stdint.h>

typedef enum QrtanStatus {
  QRTAN_STATUS_OK = 0,
  QRTAN_STATUS_NULL_POINTER = 1,
  QRTAN_STATUS_INVALID_ARGUMENT = 2,
  QRTAN_STATUS_DOMAIN = 3,
  QRTAN_STATUS_INTERNAL = 4,
  QRTAN_STATUS_IO = 5,
  QRTAN_STATUS_PANIC = 6,
} QrtanStatus;

typedef enum QrtanFateKind {
  QRTAN_FATE_KIND_TO_UPPER_FIXED = 0,
  QRTAN_FATE_KIND_TO_LOWER_FIXED = 1,
  QRTAN_FATE_KIND_TO_ORIGIN = 2,
  QRTAN_FATE_KIND_ESCAPING = 3,
  QRTAN_FATE_KIND_POLE_HIT = 4,
  QRTAN_FATE_KIND_UNDECIDED = 5,
} QrtanFateKind;

/**
 * Opaque handle to an RGB image.
 */
typedef struct QrtanImage QrtanImage;

/**
 * Opaque handle to a map `T_λ`.
 */
typedef struct QrtanMap QrtanMap;

/**
 * A point of R³ ∪ {∞}; when `is_infinite` is nonzero the coordinates are 0.
 */
typedef struct QrtanPoint {
  double x;
  double y;
  double z;
  int32_t is_infinite;
} QrtanPoint;

/**
 * Pole `((n + m)π/2, (n − m + 1)π/2)`.
 */
typedef struct QrtanPole {
  int64_t m;
  int64_t n;
} QrtanPole;

typedef struct QrtanFate {
  enum QrtanFateKind fate;
  uint64_t iterations;
  double residual;
  struct QrtanPoint witness;
} QrtanFate;

/**
 * Basin rendering settings; `threads = 0` uses all cores.
 */
typedef struct QrtanRenderConfig {
  double lambda;
  double x0;
  double y0;
  double x1;
  double y1;
  uint32_t width;
  uint32_t height;
  uint64_t max_iter;
  double tol;
  uint32_t threads;
} QrtanRenderConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qrtan_last_error(void);

/**
 * Creates a map `T_λ`; `lambda` must be positive and finite.
 *
 * # Safety
 * `out` must be NULL or valid for writing a pointer.
 */
enum QrtanStatus qrtan_map_new(double lambda, struct QrtanMap **out);

/**
 * Releases a map; NULL is ignored.
 *
 * # Safety
 * `map` must be NULL or a handle from [`qrtan_map_new`] not yet freed.
 */
void qrtan_map_free(struct QrtanMap *map);

/**
 * # Safety
 * `map` must be NULL or a live handle; `out` NULL or writable.
 */
enum QrtanStatus qrtan_map_lambda(const struct QrtanMap *map, double *out);

/**
 * Evaluates `T_λ(x, y, z)`; poles give `is_infinite = 1`.
 *
 * # Safety
 * `map` must be NULL or a live handle; `out` NULL or writable.
 */
enum QrtanStatus qrtan_map_eval(const struct QrtanMap *map,
                                double x,
                                double y,
                                double z,
                                struct QrtanPoint *out);

/**
 * The inverse branch `S_q(w)` in the pole diamond of `q`. Pass
 * `w_is_infinite = 1` for `w = ∞` (the result is the pole itself).
 *
 * # Safety
 * `map` must be NULL or a live handle; `out_x`, `out_y` NULL or writable.
 */
enum QrtanStatus qrtan_inverse_branch(const struct QrtanMap *map,
                                      struct QrtanPole q,
                                      double wx,
                                      double wy,
                                      int32_t w_is_infinite,
                                      double *out_x,
                                      double *out_y);

/**
 * The positive solution of `ξ = λ tanh ξ`; `QRTAN_STATUS_DOMAIN` for `λ ≤ 1`.
 *
 * # Safety
 * `out` must be NULL or writable.
 */
enum QrtanStatus qrtan_solve_xi0(double lambda, double *out);

/**
 * Classifies the orbit of `(x, y, z)`.
 *
 * # Safety
 * `map` must be NULL or a live handle; `out` NULL or writable.
 */
enum QrtanStatus qrtan_classify_orbit(const struct QrtanMap *map,
                                      double x,
                                      double y,
                                      double z,
                                      uint64_t max_iter,
                                      double tol,
                                      struct QrtanFate *out);

/**
 * Reads up to `capacity` itinerary symbols of `(x, y)` into `buf` and
 * stores the number read in `out_len`.
 *
 * # Safety
 * `map` must be NULL or a live handle; `buf` must be valid for `capacity`
 * writes (it may be NULL when `capacity` is 0); `out_len` NULL or writable.
 */
enum QrtanStatus qrtan_itinerary_of(const struct QrtanMap *map,
                                    double x,
                                    double y,
                                    struct QrtanPole *buf,
                                    uintptr_t capacity,
                                    uintptr_t *out_len);

/**
 * Renders a basin picture.
 *
 * # Safety
 * `cfg` must be NULL or readable; `out` NULL or writable.
 */
enum QrtanStatus qrtan_render_basin(const struct QrtanRenderConfig *cfg, struct QrtanImage **out);

/**
 * # Safety
 * `img` must be NULL or a live handle.
 */
uint32_t qrtan_image_width(const struct QrtanImage *img);

/**
 * # Safety
 * `img` must be NULL or a live handle.
 */
uint32_t qrtan_image_height(const struct QrtanImage *img);

/**
 * Row-major RGB bytes (`3·width·height` of them), owned by the image.
 *
 * # Safety
 * `img` must be NULL or a live handle; `out_len` NULL or writable.
 */
const uint8_t *qrtan_image_data(const struct QrtanImage *img, uintptr_t *out_len);

/**
 * Writes the image as binary PPM.
 *
 * # Safety
 * `img` must be NULL or a live handle; `path` NULL or a NUL-terminated string.
 */
enum QrtanStatus qrtan_image_write_ppm(const struct QrtanImage *img, const char *path);

/**
 * Releases an image; NULL is ignored.
 *
 * # Safety
 * `img` must be NULL or a handle from [`qrtan_render_basin`] not yet freed.
 */
void qrtan_image_free(struct QrtanImage *img);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRTAN_H */
