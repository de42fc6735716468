#ifndef FFA_H
#define FFA_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. The numeric values match the `ffa` exit codes
 * where they overlap.
 */
typedef enum FfaStatus {
  FFA_STATUS_OK = 0,
  /**
   * The command ran and reported warnings or violations.
   */
  FFA_STATUS_FINDINGS = 1,
  /**
   * Bad program, format, name or argument.
   */
  FFA_STATUS_INPUT_ERROR = 2,
  /**
   * A broken invariant or a panic inside the library.
   */
  FFA_STATUS_INTERNAL_ERROR = 3,
  /**
   * A required pointer argument was null.
   */
  FFA_STATUS_NULL_ARGUMENT = 4,
} FfaStatus;

typedef enum FfaFormat {
  FFA_FORMAT_TEXT = 0,
  FFA_FORMAT_JSON = 1,
  FFA_FORMAT_DOT = 2,
} FfaFormat;

typedef enum FfaMode {
  FFA_MODE_UNDER = 0,
  FFA_MODE_OVER = 1,
} FfaMode;

/**
 * Opaque handle to a loaded program.
 */
typedef struct FfaSession FfaSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse `program` and, when `format_spec` is not null, a format
 * description. On success `*out` owns a new session.
 *
 * # Safety
 * String arguments must be null or valid NUL-terminated strings; `out`
 * must be a valid pointer.
 */
enum FfaStatus ffa_session_new(const char *program,
                               const char *format_spec,
                               struct FfaSession **out);

/**
 * Attach a table snapshot (JSON object from table name to key list).
 *
 * # Safety
 * `session` must come from `ffa_session_new`; `tables_json` must be a
 * valid NUL-terminated string.
 */
enum FfaStatus ffa_session_set_tables(struct FfaSession *session, const char *tables_json);

/**
 * # Safety
 * `session` must be null or come from `ffa_session_new`, and must not be
 * used afterwards.
 */
void ffa_session_free(struct FfaSession *session);

/**
 * Facts per program point and file state. A null `automaton` analyzes
 * the plain control flow graph.
 *
 * # Safety
 * Pointers as for `ffa_session_new`; `out` receives a string to release
 * with `ffa_string_free`.
 */
enum FfaStatus ffa_analyze(const struct FfaSession *session,
                           const char *automaton,
                           const char *domain,
                           enum FfaFormat fmt,
                           char **out);

/**
 * Conformance report as JSON. Returns `Findings` when there are warnings.
 *
 * # Safety
 * As for `ffa_analyze`.
 */
enum FfaStatus ffa_conformance(const struct FfaSession *session,
                               const char *automaton,
                               enum FfaMode mode,
                               const char *domain,
                               char **out);

/**
 * Specialize for each comma-separated criterion. The JSON result holds
 * every specialized source, its rewrites and the commonality summary.
 *
 * # Safety
 * As for `ffa_analyze`.
 */
enum FfaStatus ffa_specialize(const struct FfaSession *session,
                              const char *criteria,
                              bool simplify,
                              char **out);

/**
 * The program file state graph in DOT.
 *
 * # Safety
 * As for `ffa_analyze`.
 */
enum FfaStatus ffa_pfsg_dot(const struct FfaSession *session,
                            const char *automaton,
                            const char *domain,
                            char **out);

/**
 * Bounded soundness check as JSON. Returns `Findings` on a violation.
 *
 * # Safety
 * As for `ffa_analyze`.
 */
enum FfaStatus ffa_verify(const struct FfaSession *session,
                          const char *automaton,
                          const char *domain,
                          uint32_t max_records,
                          char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void ffa_string_free(char *s);

/**
 * Message of the last failed call on this thread; empty if none. Valid
 * until the next call into the library on the same thread.
 */
const char *ffa_last_error(void);

/**
 * Library version, statically allocated.
 */
const char *ffa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FFA_H */
