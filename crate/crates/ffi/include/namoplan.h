#ifndef NAMOPLAN_H
#define NAMOPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum NamoStatus {
  NAMO_STATUS_OK = 0,
  NAMO_STATUS_NULL_ARGUMENT = 1,
  NAMO_STATUS_INVALID_UTF8 = 2,
  NAMO_STATUS_PARSE = 3,
  NAMO_STATUS_INVALID_ARGUMENT = 4,
  NAMO_STATUS_MODEL = 5,
  NAMO_STATUS_PLANNER = 6,
  NAMO_STATUS_PANIC = 7,
} NamoStatus;

/**
 * Trained scoring network weights.
 */
typedef struct NamoModel NamoModel;

/**
 * A planning task in the maze domain.
 */
typedef struct NamoTask NamoTask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a problem file written against the maze domain.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NamoStatus namo_task_from_pddl(const char *text, struct NamoTask **out);

/**
 * Builds a task from an instance record in JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NamoStatus namo_task_from_record_json(const char *json, struct NamoTask **out);

/**
 * Samples an `n x n` maze with the default cell probabilities.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NamoStatus namo_task_generate(size_t n, uint64_t seed, struct NamoTask **out);

/**
 * Writes the task as a problem file.
 *
 * # Safety
 * `task` must come from this library and `out` must be a valid pointer.
 */
enum NamoStatus namo_task_to_pddl(const struct NamoTask *task, char **out);

/**
 * Number of objects in the task.
 *
 * # Safety
 * `task` must be null or come from this library.
 */
size_t namo_task_entity_count(const struct NamoTask *task);

/**
 * # Safety
 * `task` must be null or come from this library and not be used afterwards.
 */
void namo_task_free(struct NamoTask *task);

/**
 * Loads network weights from their JSON serialisation.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NamoStatus namo_model_from_json(const char *json, struct NamoModel **out);

/**
 * # Safety
 * `model` must be null or come from this library and not be used afterwards.
 */
void namo_model_free(struct NamoModel *model);

/**
 * Runs one planner and writes the result record as JSON.
 *
 * `method` is one of `pure`, `ploi`, `ploi+comp`, `ploi+relax`, `flax`.
 * `model` may be null only for `pure`. A nonzero `wall_clock` measures the
 * budget in real seconds; otherwise the deterministic work clock is used.
 * A failed search is not an error: check `success` in the JSON.
 *
 * # Safety
 * Handles must come from this library, `method` must be NUL-terminated and
 * `out_json` a valid pointer.
 */
enum NamoStatus namo_plan(const struct NamoTask *task,
                          const struct NamoModel *model,
                          const char *method,
                          double budget_secs,
                          int32_t wall_clock,
                          char **out_json);

/**
 * Checks a plan (one `(action args...)` per line) against the task.
 *
 * # Safety
 * `task` must come from this library, `plan` must be NUL-terminated and
 * `out_valid` a valid pointer.
 */
enum NamoStatus namo_validate_plan(const struct NamoTask *task, const char *plan, bool *out_valid);

/**
 * Message of the last failed call on this thread, or null. The caller owns
 * the returned string.
 */
char *namo_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void namo_string_free(char *s);

/**
 * Library version, statically allocated.
 */
const char *namo_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NAMOPLAN_H */
