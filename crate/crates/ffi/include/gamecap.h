#ifndef GAMECAP_H
#define GAMECAP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `GC_OK` is zero.
 */
typedef enum gc_status {
  GC_OK = 0,
  GC_NULL_POINTER = 1,
  GC_INVALID_ARGUMENT = 2,
  GC_DIMENSION_MISMATCH = 3,
  GC_OUT_OF_RANGE = 4,
  GC_MALFORMED = 5,
  GC_INVARIANT = 6,
  GC_NOT_GAME_CHANNEL = 7,
  GC_BUDGET_EXCEEDED = 8,
  GC_NUMERIC = 9,
  GC_PRECONDITION = 10,
  GC_JSON = 11,
  GC_IO = 12,
  GC_INVALID_UTF8 = 13,
  GC_PANIC = 99,
} gc_status;

/**
 * Built-in cooperation boxes.
 */
typedef enum gc_box {
  /**
   * PR box for CHSH.
   */
  GC_BOX_PR = 0,
  /**
   * Optimal qubit strategy for CHSH.
   */
  GC_BOX_TSIRELSON = 1,
  /**
   * Two Bell pairs for the magic square.
   */
  GC_BOX_MERMIN_PERES = 2,
  /**
   * GHZ strategy for the K-player parity game.
   */
  GC_BOX_GHZ = 3,
} gc_box;

typedef enum gc_channel_mode {
  GC_PER_RECEIVER = 0,
  GC_GLOBAL = 1,
} gc_channel_mode;

/**
 * A multi-terminal channel.
 */
typedef struct gc_channel gc_channel;

/**
 * A non-local game.
 */
typedef struct gc_game gc_game;

/**
 * A conditional distribution of answers given questions.
 */
typedef struct gc_table gc_table;

/**
 * Options for the multi-start Blahut-Arimoto search.
 */
typedef struct gc_gba_options {
  double tolerance;
  size_t max_iterations;
  size_t num_starts;
  uint64_t rng_seed;
  /**
   * When true, start every run from the uniform distribution.
   */
  bool uniform_init;
} gc_gba_options;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next library call on the same thread.
 */
const char *gc_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void gc_string_free(char *s);

/**
 * Built-in game by name (`chsh`, `magic-square`, `parity`, `N-parity`).
 * `k` is the parity game's player count; 0 selects the default.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum gc_status gc_game_builtin(const char *name, size_t k, struct gc_game **out_game);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum gc_status gc_game_from_json(const char *json, struct gc_game **out_game);

/**
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum gc_status gc_game_to_json(const struct gc_game *game, char **out_json);

/**
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum gc_status gc_game_num_parties(const struct gc_game *game, size_t *out_k);

/**
 * # Safety
 * `game` must be NULL or a handle from this library, not yet freed.
 */
void gc_game_free(struct gc_game *game);

/**
 * Best winning probability over deterministic strategies.
 *
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum gc_status gc_classical_max_win(const struct gc_game *game, double *out_p);

/**
 * Built-in cooperation box. `k` is the player count for `GcBoxGhz`.
 *
 * # Safety
 * `out` must be writable.
 */
enum gc_status gc_table_builtin(enum gc_box kind, size_t k, struct gc_table **out_table);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum gc_status gc_table_from_json(const char *json, struct gc_table **out_table);

/**
 * # Safety
 * `table` must be NULL or a handle from this library, not yet freed.
 */
void gc_table_free(struct gc_table *table);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum gc_status gc_winning_probability(const struct gc_game *game,
                                      const struct gc_table *table,
                                      double *out_p);

/**
 * Writes whether the table is no-signaling at `tol` and the largest
 * marginal deviation found.
 *
 * # Safety
 * `table` must be live; outputs must be writable.
 */
enum gc_status gc_is_no_signaling(const struct gc_table *table,
                                  double tol,
                                  bool *out_ok,
                                  double *out_deviation);

/**
 * Game channel with winning reliability `eta_w` and losing reliability
 * `eta_l`; receiver alphabets equal the question alphabets.
 *
 * # Safety
 * `game` must be live; `out` must be writable.
 */
enum gc_status gc_channel_build(const struct gc_game *game,
                                double eta_w,
                                double eta_l,
                                enum gc_channel_mode mode,
                                struct gc_channel **out_channel);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum gc_status gc_channel_from_json(const char *json, struct gc_channel **out_channel);

/**
 * # Safety
 * `channel` must be live; `out` must be writable.
 */
enum gc_status gc_channel_to_json(const struct gc_channel *channel, char **out_json);

/**
 * # Safety
 * `channel` must be NULL or a handle from this library, not yet freed.
 */
void gc_channel_free(struct gc_channel *channel);

/**
 * Cooperative sum capacity in bits. Fails with `GcNotGameChannel` when the
 * channel is not a game channel for `game`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum gc_status gc_closed_form_capacity(const struct gc_channel *channel,
                                       const struct gc_game *game,
                                       double *out_bits);

/**
 * Library defaults: tolerance 1e-9, 20000 iterations, 50 random starts.
 */
struct gc_gba_options gc_gba_default_options(void);

/**
 * Sum capacity over independent inputs, in bits.
 *
 * # Safety
 * `channel` and `options` must be valid; `out` must be writable.
 */
enum gc_status gc_gba_sum_capacity(const struct gc_channel *channel,
                                   const struct gc_gba_options *options,
                                   double *out_bits);

/**
 * Closed-form cooperative capacity minus the independent-input capacity.
 *
 * # Safety
 * Pointers must be valid; `out` must be writable.
 */
enum gc_status gc_cooperation_gap(const struct gc_channel *channel,
                                  const struct gc_game *game,
                                  const struct gc_gba_options *options,
                                  double *out_bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAMECAP_H */
