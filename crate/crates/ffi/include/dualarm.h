#ifndef DUALARM_H
#define DUALARM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DaStatus {
  DA_STATUS_OK = 0,
  DA_STATUS_NULL_POINTER = 1,
  DA_STATUS_INVALID_UTF8 = 2,
  DA_STATUS_IO = 3,
  DA_STATUS_SCENE = 4,
  DA_STATUS_ACTION = 5,
  DA_STATUS_WORLD_BUSY = 6,
  DA_STATUS_INTERNAL = 7,
} DaStatus;

typedef enum DaDifficulty {
  DA_DIFFICULTY_NOMINAL = 0,
  DA_DIFFICULTY_EASY = 1,
  DA_DIFFICULTY_MEDIUM = 2,
  DA_DIFFICULTY_HARD = 3,
} DaDifficulty;

/**
 * Opaque simulator state.
 */
typedef struct DaWorld DaWorld;

typedef struct DaMpeIndex {
  int64_t t;
  int8_t sy;
  int8_t sx;
} DaMpeIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Load a scene file. `seed` replaces the file's seed unless `use_file_seed`
 * is true. On success `*out` receives a handle released by [`da_world_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DaStatus da_world_load(const char *path,
                            uint64_t seed,
                            bool use_file_seed,
                            struct DaWorld **out);

/**
 * # Safety
 * `world` must be null or a handle from [`da_world_load`] not yet freed.
 */
void da_world_free(struct DaWorld *world);

/**
 * Apply one action given as JSON. The action's trajectory is scheduled but
 * not run; advance it with [`da_world_step_tick`] or [`da_world_run_to_idle`].
 * If `result_json` is non-null it receives the action result as JSON.
 *
 * # Safety
 * `world` must be a live handle and `action_json` a NUL-terminated string.
 */
enum DaStatus da_world_apply_action(struct DaWorld *world,
                                    const char *action_json,
                                    enum DaDifficulty difficulty,
                                    char **result_json);

/**
 * Advance the in-flight trajectory by one tick. A no-op when idle.
 *
 * # Safety
 * `world` must be a live handle.
 */
enum DaStatus da_world_step_tick(struct DaWorld *world);

/**
 * Tick until idle. `ticks` may be null.
 *
 * # Safety
 * `world` must be a live handle.
 */
enum DaStatus da_world_run_to_idle(struct DaWorld *world, uint64_t *ticks);

/**
 * Current observation frame as JSON.
 *
 * # Safety
 * `world` must be a live handle and `out` a valid pointer.
 */
enum DaStatus da_world_observe_json(struct DaWorld *world, char **out);

/**
 * 64-bit state digest; printed as 16 lowercase hex digits it matches the
 * `digest` field of protocol responses.
 *
 * # Safety
 * `world` must be a live handle and `out` a valid pointer.
 */
enum DaStatus da_world_digest(struct DaWorld *world, uint64_t *out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void da_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *da_last_error_message(void);

struct DaMpeIndex da_mpe_index(int64_t t, int64_t x, int64_t y, int64_t xr, int64_t yr);

const char *da_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUALARM_H */
