/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef CASCADE_H
#define CASCADE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CascadeStatus {
  CASCADE_STATUS_OK = 0,
  CASCADE_STATUS_NULL_POINTER = 1,
  CASCADE_STATUS_INVALID_ARGUMENT = 2,
  CASCADE_STATUS_DOMAIN = 3,
  CASCADE_STATUS_CONFIG = 4,
  CASCADE_STATUS_PARSE = 5,
  CASCADE_STATUS_IO = 6,
  CASCADE_STATUS_PANIC = 7,
} CascadeStatus;

typedef enum CascadeCostDimension {
  CASCADE_COST_DIMENSION_LATENCY = 0,
  CASCADE_COST_DIMENSION_ENERGY = 1,
  CASCADE_COST_DIMENSION_CYCLES = 2,
} CascadeCostDimension;

typedef enum CascadePolicyKind {
  CASCADE_POLICY_KIND_STATIC_SMALL = 0,
  CASCADE_POLICY_KIND_STATIC_BIG = 1,
  CASCADE_POLICY_KIND_RANDOM = 2,
  CASCADE_POLICY_KIND_OP = 3,
  CASCADE_POLICY_KIND_AUX_SM = 4,
  CASCADE_POLICY_KIND_AUX_HLC = 5,
  CASCADE_POLICY_KIND_ORACLE = 6,
} CascadePolicyKind;

typedef struct CascadeErrorMap CascadeErrorMap;

typedef struct CascadeSweep CascadeSweep;

typedef struct CascadeTrace CascadeTrace;

typedef struct CascadeModelCost {
  double latency_ms;
  double energy_mj;
  double cycles;
  uint64_t weight_bytes;
  uint64_t activation_bytes;
} CascadeModelCost;

typedef struct CascadeCostTable {
  struct CascadeModelCost small;
  struct CascadeModelCost big;
  struct CascadeModelCost aux;
} CascadeCostTable;

// Policy descriptor. `param` is the threshold, or `p_big` for random; it is
// ignored by static and oracle policies. `absolute` applies to OP only,
// `ensemble_average` to the oracle only.
typedef struct CascadePolicy {
  enum CascadePolicyKind kind;
  double param;
  uint64_t seed;
  bool absolute;
  bool ensemble_average;
} CascadePolicy;

typedef struct CascadeOperatingPoint {
  enum CascadePolicyKind kind;
  double threshold;
  double big_fraction;
  double mae_x;
  double mae_y;
  double mae_z;
  double mae_phi;
  double mae_sum;
  double latency_ms;
  double energy_mj;
  double cycles;
  uint64_t memory_bytes;
} CascadeOperatingPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call into this library on the same thread.
const char *cascade_last_error_message(void);

// # Safety
// `path` must be a nul-terminated string and `out_trace` a valid pointer.
enum CascadeStatus cascade_trace_load(const char *path, struct CascadeTrace **out_trace);

// # Safety
// `trace` must come from this library; `path` must be nul-terminated.
enum CascadeStatus cascade_trace_save(const struct CascadeTrace *trace, const char *path);

// Number of frames, 0 for null.
//
// # Safety
// `trace` must be null or come from this library.
size_t cascade_trace_len(const struct CascadeTrace *trace);

// # Safety
// `trace` must be null or come from this library, and is invalid afterwards.
void cascade_trace_free(struct CascadeTrace *trace);

// Generates a synthetic stream with default settings (or the hard-borders
// preset) and returns its train/validation/test splits.
//
// # Safety
// The three output pointers must be valid.
enum CascadeStatus cascade_synth_generate(size_t n_frames,
                                          uint64_t seed,
                                          bool hard_borders,
                                          struct CascadeTrace **out_train,
                                          struct CascadeTrace **out_validation,
                                          struct CascadeTrace **out_test);

// # Safety
// `validation` must come from this library and `out_map` must be valid.
enum CascadeStatus cascade_errormap_build(const struct CascadeTrace *validation,
                                          struct CascadeErrorMap **out_map);

// # Safety
// `path` must be nul-terminated and `out_map` valid.
enum CascadeStatus cascade_errormap_load(const char *path, struct CascadeErrorMap **out_map);

// # Safety
// `map` must come from this library; `path` must be nul-terminated.
enum CascadeStatus cascade_errormap_save(const struct CascadeErrorMap *map, const char *path);

// Map value at grid cell (`col`, `row`).
//
// # Safety
// `map` must come from this library and `out_value` must be valid.
enum CascadeStatus cascade_errormap_lookup(const struct CascadeErrorMap *map,
                                           size_t col,
                                           size_t row,
                                           double *out_value);

// # Safety
// `map` must be null or come from this library, and is invalid afterwards.
void cascade_errormap_free(struct CascadeErrorMap *map);

// Fills `out_costs` with a named deployment preset (`"d1"` or `"d2"`).
//
// # Safety
// `name` must be nul-terminated and `out_costs` valid.
enum CascadeStatus cascade_cost_preset(const char *name, struct CascadeCostTable *out_costs);

// Expected per-frame cost when the small model always runs and the big one on `f_big` of frames.
//
// # Safety
// `costs` and `out_cost` must be valid.
enum CascadeStatus cascade_cost_op(double f_big,
                                   const struct CascadeCostTable *costs,
                                   enum CascadeCostDimension dim,
                                   double *out_cost);

// Expected per-frame cost when the aux network always runs and exactly one model follows.
//
// # Safety
// `costs` and `out_cost` must be valid.
enum CascadeStatus cascade_cost_aux(double f_big,
                                    const struct CascadeCostTable *costs,
                                    enum CascadeCostDimension dim,
                                    double *out_cost);

// Top-1 minus top-2 of `len` probabilities.
//
// # Safety
// `probs` must point to `len` doubles and `out_margin` must be valid.
enum CascadeStatus cascade_score_margin(const double *probs, size_t len, double *out_margin);

// Runs one policy over a trace. `map` may be null unless the policy is Aux-HLC.
//
// # Safety
// Handles must come from this library; other pointers must be valid.
enum CascadeStatus cascade_evaluate(const struct CascadeTrace *trace,
                                    const struct CascadePolicy *policy,
                                    const struct CascadeErrorMap *map,
                                    const struct CascadeCostTable *costs,
                                    struct CascadeOperatingPoint *out_point);

// Sweeps the policy's parameter over every candidate value. The descriptor's
// own `param` is ignored.
//
// # Safety
// Handles must come from this library; other pointers must be valid.
enum CascadeStatus cascade_sweep(const struct CascadeTrace *trace,
                                 const struct CascadePolicy *policy,
                                 const struct CascadeErrorMap *map,
                                 const struct CascadeCostTable *costs,
                                 struct CascadeSweep **out_sweep);

// Pareto-optimal subset of a sweep in the (cost, MAE sum) plane, as a new handle.
//
// # Safety
// `sweep` must come from this library and `out_front` must be valid.
enum CascadeStatus cascade_sweep_pareto(const struct CascadeSweep *sweep,
                                        enum CascadeCostDimension dim,
                                        struct CascadeSweep **out_front);

// Number of points, 0 for null.
//
// # Safety
// `sweep` must be null or come from this library.
size_t cascade_sweep_len(const struct CascadeSweep *sweep);

// # Safety
// `sweep` must come from this library and `out_point` must be valid.
enum CascadeStatus cascade_sweep_get(const struct CascadeSweep *sweep,
                                     size_t index,
                                     struct CascadeOperatingPoint *out_point);

// # Safety
// `sweep` must be null or come from this library, and is invalid afterwards.
void cascade_sweep_free(struct CascadeSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_H */
