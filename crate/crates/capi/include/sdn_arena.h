/* C interface to the sdn-arena game engine and statistics. */

#ifndef SDN_ARENA_H
#define SDN_ARENA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of a fallible call. Anything but `Ok` leaves a message
 * readable through `sdna_last_error` on the calling thread.
 */
typedef enum SdnaStatus {
  SDNA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SDNA_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was out of range for the call.
   */
  SDNA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A config file or TOML string failed to parse or validate.
   */
  SDNA_STATUS_PARSE_ERROR = 3,
  /**
   * The move was rejected by the game rules.
   */
  SDNA_STATUS_RULE_VIOLATION = 4,
  /**
   * The statistics routine rejected its inputs.
   */
  SDNA_STATUS_STATS_ERROR = 5,
  /**
   * A caller-supplied buffer is too small.
   */
  SDNA_STATUS_BUFFER_TOO_SMALL = 6,
} SdnaStatus;

/**
 * Side identifier shared with the C world.
 */
typedef enum SdnaRole {
  SDNA_ROLE_ATTACKER = 0,
  SDNA_ROLE_DEFENDER = 1,
} SdnaRole;

/**
 * Opaque topology config handle.
 */
typedef struct SdnaConfig SdnaConfig;

/**
 * Opaque game session handle.
 */
typedef struct SdnaGame SdnaGame;

/**
 * What one applied action returned.
 */
typedef struct SdnaTurnOutcome {
  /**
   * Reward of the acting side.
   */
  int32_t reward;
  /**
   * Non-zero once the game is decided.
   */
  bool done;
  /**
   * Winning side when `done`, otherwise -1.
   */
  int32_t winner;
  uint64_t defender_turns;
  int64_t defender_score;
  int64_t attacker_score;
} SdnaTurnOutcome;

/**
 * Flat mirror of the library's t-test report. `pearson` is NaN when the
 * correlation is undefined or not part of the chosen test.
 */
typedef struct SdnaTTestReport {
  double mean_x;
  double mean_y;
  double var_x;
  double var_y;
  double pearson;
  double df;
  double t_stat;
  double p_one_tail;
  double t_crit_one_tail;
  double p_two_tail;
  double t_crit_two_tail;
  double alpha;
} SdnaTTestReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, empty string if none.
 * The pointer stays valid until the next failing `sdna_` call on the same
 * thread.
 */
const char *sdna_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sdna_version(void);

/**
 * Build the bundled default network config.
 *
 * # Safety
 * `out` must point to writable `SdnaConfig *` storage.
 */
enum SdnaStatus sdna_config_default(struct SdnaConfig **out);

/**
 * Load and validate a TOML config file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` as in
 * [`sdna_config_default`].
 */
enum SdnaStatus sdna_config_load(const char *path, struct SdnaConfig **out);

/**
 * Parse and validate a TOML config from memory.
 *
 * # Safety
 * `text` must be a NUL-terminated UTF-8 string; `out` as in
 * [`sdna_config_default`].
 */
enum SdnaStatus sdna_config_from_toml(const char *text, struct SdnaConfig **out);

/**
 * Release a config handle. Null is a no-op.
 *
 * # Safety
 * `cfg` must come from an `sdna_config_*` constructor and not be used again.
 */
void sdna_config_free(struct SdnaConfig *cfg);

/**
 * Number of hosts.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
size_t sdna_config_host_count(const struct SdnaConfig *cfg);

/**
 * Number of subnet switches.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
size_t sdna_config_switch_count(const struct SdnaConfig *cfg);

/**
 * Number of links.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
size_t sdna_config_link_count(const struct SdnaConfig *cfg);

/**
 * Length of the observation vector (hosts + links).
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
size_t sdna_config_observation_len(const struct SdnaConfig *cfg);

/**
 * Host id the critical service starts on.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
size_t sdna_config_critical_server(const struct SdnaConfig *cfg);

/**
 * Total points in play; the two scores always sum to this.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
int64_t sdna_config_score_total(const struct SdnaConfig *cfg);

/**
 * Size of a role's action space under this config.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
size_t sdna_config_action_count(const struct SdnaConfig *cfg, enum SdnaRole role);

/**
 * Start a game with the given per-agent turn cap.
 *
 * # Safety
 * `cfg` must be a live config handle; `out` must point to writable
 * `SdnaGame *` storage.
 */
enum SdnaStatus sdna_game_new(const struct SdnaConfig *cfg,
                              uint64_t turn_cap_per_agent,
                              struct SdnaGame **out);

/**
 * Release a game handle. Null is a no-op.
 *
 * # Safety
 * `game` must come from [`sdna_game_new`] and not be used again.
 */
void sdna_game_free(struct SdnaGame *game);

/**
 * Side whose turn it is.
 *
 * # Safety
 * `game` must be a live game handle.
 */
enum SdnaRole sdna_game_to_move(const struct SdnaGame *game);

/**
 * Winning side, or -1 while the game is still running.
 *
 * # Safety
 * `game` must be a live game handle.
 */
int32_t sdna_game_winner(const struct SdnaGame *game);

/**
 * Current scoreboard.
 *
 * # Safety
 * `game` must be a live game handle; score pointers must be writable.
 */
enum SdnaStatus sdna_game_scores(const struct SdnaGame *game, int64_t *defender, int64_t *attacker);

/**
 * Turns played so far over both sides.
 *
 * # Safety
 * `game` must be a live game handle.
 */
uint64_t sdna_game_total_turns(const struct SdnaGame *game);

/**
 * Copy the current observation into `buf`. `len` must equal the config's
 * observation length.
 *
 * # Safety
 * `game` must be a live game handle; `buf` must point to `len` writable
 * doubles.
 */
enum SdnaStatus sdna_game_observation(const struct SdnaGame *game, double *buf, size_t len);

/**
 * List the actions legal for the side to move. `capacity` bounds how many
 * indices fit in `buf`; `written` receives the count.
 *
 * # Safety
 * `game` must be a live game handle; `buf` must point to `capacity` writable
 * `size_t` slots; `written` must be writable.
 */
enum SdnaStatus sdna_game_legal_actions(const struct SdnaGame *game,
                                        size_t *buf,
                                        size_t capacity,
                                        size_t *written);

/**
 * Apply one action for `role` and report what happened.
 *
 * # Safety
 * `game` must be a live game handle; `out` must be writable.
 */
enum SdnaStatus sdna_game_step(struct SdnaGame *game,
                               enum SdnaRole role,
                               size_t action,
                               struct SdnaTurnOutcome *out);

/**
 * Two-sample paired t-test over two equally long arrays.
 *
 * # Safety
 * `xs` and `ys` must point to `len` readable doubles; `out` must be
 * writable.
 */
enum SdnaStatus sdna_paired_ttest(const double *xs,
                                  const double *ys,
                                  size_t len,
                                  double alpha,
                                  struct SdnaTTestReport *out);

/**
 * Two-sample pooled-variance t-test over two arrays.
 *
 * # Safety
 * `xs` must point to `len_x` readable doubles and `ys` to `len_y`; `out`
 * must be writable.
 */
enum SdnaStatus sdna_unpaired_ttest(const double *xs,
                                    size_t len_x,
                                    const double *ys,
                                    size_t len_y,
                                    double alpha,
                                    struct SdnaTTestReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDN_ARENA_H */
