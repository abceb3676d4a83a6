#ifndef SCENEGEN_H
#define SCENEGEN_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_ARGUMENT = 1,
  SG_STATUS_INVALID_UTF8 = 2,
  SG_STATUS_INVALID_JSON = 3,
  SG_STATUS_GEOMETRY = 4,
  SG_STATUS_STL = 5,
  SG_STATUS_TILES = 6,
  SG_STATUS_OUT_OF_RANGE = 7,
  SG_STATUS_PANIC = 99,
} SgStatus;

/**
 * A parsed STL formula.
 */
typedef struct SgFormula SgFormula;

/**
 * A clamped cubic B-spline.
 */
typedef struct SgSpline SgSpline;

/**
 * A grid of 4-neighbor tile codes.
 */
typedef struct SgTileGrid SgTileGrid;

/**
 * Named signals on a shared time axis.
 */
typedef struct SgTrace SgTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Owned by the
 * library; valid until the next failing call on this thread.
 */
const char *sg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sg_version(void);

void sg_string_free(char *s);

/**
 * Parses a spline file (`{"closed": …, "control_points": [[x, y], …]}`).
 */
enum SgStatus sg_spline_from_json(const char *json, struct SgSpline **out);

/**
 * Least-squares fit with chord-length parameters. `xy` holds `n_points`
 * interleaved coordinate pairs.
 */
enum SgStatus sg_spline_fit(const double *xy,
                            size_t n_points,
                            size_t n_ctrl,
                            struct SgSpline **out);

size_t sg_spline_control_point_count(const struct SgSpline *spline);

/**
 * Evaluates the curve at `t` in [0, 1].
 */
enum SgStatus sg_spline_eval(const struct SgSpline *spline, double t, double *out_x, double *out_y);

/**
 * L_p distance over the parameter domain; pass `INFINITY` for the supremum.
 */
enum SgStatus sg_spline_distance(const struct SgSpline *a,
                                 const struct SgSpline *b,
                                 double p,
                                 size_t samples,
                                 double *out);

enum SgStatus sg_spline_to_json(const struct SgSpline *spline, char **out);

void sg_spline_free(struct SgSpline *spline);

/**
 * Parses STL text such as `G[0,10](d1 < 5)`.
 */
enum SgStatus sg_formula_parse(const char *text, struct SgFormula **out);

/**
 * Fully parenthesized text of the formula.
 */
enum SgStatus sg_formula_to_string(const struct SgFormula *formula, char **out);

void sg_formula_free(struct SgFormula *formula);

/**
 * Parses a trace file (`{"timestamps": […], "signals": {"name": […]}}`).
 */
enum SgStatus sg_trace_from_json(const char *json, struct SgTrace **out);

void sg_trace_free(struct SgTrace *trace);

/**
 * Boolean verdict and robustness of `formula` at the first sample.
 */
enum SgStatus sg_monitor(const struct SgFormula *formula,
                         const struct SgTrace *trace,
                         bool *out_satisfied,
                         double *out_robustness);

/**
 * Rasterizes `spline` into a `width` x `height` grid and codes the tiles.
 */
enum SgStatus sg_tiles_from_spline(const struct SgSpline *spline,
                                   size_t width,
                                   size_t height,
                                   double road_halfwidth,
                                   struct SgTileGrid **out);

enum SgStatus sg_tile_grid_from_json(const char *json, struct SgTileGrid **out);

size_t sg_tile_grid_width(const struct SgTileGrid *grid);

size_t sg_tile_grid_height(const struct SgTileGrid *grid);

/**
 * Tile code 0..=15 at `(x, y)`, or -1 for a non-road cell.
 */
enum SgStatus sg_tile_grid_get(const struct SgTileGrid *grid,
                               size_t x,
                               size_t y,
                               int32_t *out_code);

enum SgStatus sg_tile_grid_to_json(const struct SgTileGrid *grid, char **out);

void sg_tile_grid_free(struct SgTileGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCENEGEN_H */
