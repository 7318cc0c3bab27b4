#ifndef ACTCAUSE_H
#define ACTCAUSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum AcStatus {
  AC_STATUS_OK = 0,
  AC_STATUS_NULL_ARGUMENT = 1,
  AC_STATUS_INVALID_UTF8 = 2,
  AC_STATUS_SCHEMA = 3,
  AC_STATUS_INVALID_CONFIG = 4,
  AC_STATUS_BUDGET = 5,
  AC_STATUS_TARGET_NOT_ACTUAL = 6,
  AC_STATUS_ORACLE = 7,
  AC_STATUS_MODEL = 8,
  AC_STATUS_PANIC = 9,
} AcStatus;

// Opaque model handle.
typedef struct AcScm AcScm;

// User oracle: receives the intervention as parallel arrays of variable
// positions and value positions (indices into the declared domains) and
// returns 1 when the target still holds, 0 when it does not and a negative
// number on failure.
typedef int32_t (*AcOracleFn)(void *user, const uint32_t *vars, const uint32_t *values, size_t len);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call on the same thread.
const char *ac_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not be freed twice.
void ac_string_free(char *s);

// Builds a model from its JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum AcStatus ac_scm_from_json(const char *json, struct AcScm **out);

// Builds a builtin model: `rock-throwing`, `smk:K`, `smk-nonboolean:K`,
// `smk-blackbox:K` or `smk-noisy:K[:RATE]`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum AcStatus ac_scm_builtin(const char *name, struct AcScm **out);

// Serializes the model (for the black-box and noisy builtins, the
// underlying Boolean model).
//
// # Safety
// `scm` must be a live handle and `out` a valid pointer.
enum AcStatus ac_scm_to_json(const struct AcScm *scm, char **out);

// # Safety
// `scm` must be null or a handle from this library, freed once.
void ac_scm_free(struct AcScm *scm);

// Identifies causes in `context` (JSON object or array of exogenous
// values). `options` is an options JSON object or null for defaults. The
// report JSON is written to `out`.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AcStatus ac_identify(const struct AcScm *scm,
                          const char *context,
                          const char *options,
                          char **out);

// Like [`ac_identify`] with the sub-instance algorithm.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AcStatus ac_identify_isi(const struct AcScm *scm,
                              const char *context,
                              const char *options,
                              char **out);

// Enumerates every cause with at most `max_size` intervened variables.
// A `budget` of 0 selects the default.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AcStatus ac_exact(const struct AcScm *scm,
                       const char *context,
                       size_t max_size,
                       uint64_t budget,
                       char **out);

// Identifies causes with a user oracle over the variables declared in
// `space` (JSON: `{"variables": [{"name", "domain", "actual"}], "parents":
// {name: [names]}, "roots": [names]}`). The callback is invoked
// sequentially on the calling thread.
//
// # Safety
// Pointers must be valid; `oracle` must be safe to call with `user`.
enum AcStatus ac_identify_oracle(const char *space,
                                 AcOracleFn oracle,
                                 void *user,
                                 const char *options,
                                 char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACTCAUSE_H */
