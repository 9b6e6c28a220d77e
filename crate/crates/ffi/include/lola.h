#ifndef LOLA_H
#define LOLA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Evaluate applications only once all arguments are known.
#define LOLA_FLAG_NO_SIMPLIFY 1

// Make every shipped template library available.
#define LOLA_FLAG_STDLIB 2

// Result of every call.
typedef enum {
  LOLA_STATUS_OK = 0,
  // No resolved row is waiting.
  LOLA_STATUS_EMPTY = 1,
  LOLA_STATUS_NULL_ARGUMENT = -1,
  LOLA_STATUS_INVALID_UTF8 = -2,
  // Source failed to parse, expand or type check.
  LOLA_STATUS_SPEC_ERROR = -3,
  // A closed dependency path has weight zero.
  LOLA_STATUS_ZERO_CYCLE = -4,
  // A positive dependency cycle rules out online monitoring.
  LOLA_STATUS_NOT_MONITORABLE = -5,
  LOLA_STATUS_INPUT_ERROR = -6,
  LOLA_STATUS_EVAL_ERROR = -7,
  // Event after finish, or finish twice.
  LOLA_STATUS_STATE_ERROR = -8,
  LOLA_STATUS_PANIC = -9,
} LolaStatus;

// Opaque monitor handle.
typedef struct LolaMonitor LolaMonitor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a monitor for the Lola source `spec`.
//
// # Safety
// `spec` is a NUL-terminated UTF-8 string; `out` is a valid pointer. On
// success `*out` owns a monitor to be released with [`lola_monitor_free`].
LolaStatus lola_monitor_new(const char *spec, uint32_t flags, LolaMonitor **out);

// Feeds one event, a JSON object with one field per input stream. Blank
// lines are ignored.
//
// # Safety
// `m` is a live monitor; `event` is a NUL-terminated UTF-8 string.
LolaStatus lola_monitor_push_json(LolaMonitor *m, const char *event);

// Signals the end of the trace; every remaining row becomes available.
//
// # Safety
// `m` is a live monitor.
LolaStatus lola_monitor_finish(LolaMonitor *m);

// Takes the oldest resolved row as a JSON string, or returns
// [`LolaStatus::Empty`] and sets `*out` to null.
//
// # Safety
// `m` is a live monitor; `out` is a valid pointer. The row is released
// with [`lola_string_free`].
LolaStatus lola_monitor_next_row(LolaMonitor *m, char **out);

// Writes the run counters as a JSON object
// `{"events","rows","max_retained","max_lookahead"}`.
//
// # Safety
// `m` is a live monitor; `out` is a valid pointer.
LolaStatus lola_monitor_stats_json(const LolaMonitor *m, char **out);

// # Safety
// `m` is null or a monitor from [`lola_monitor_new`] not yet freed.
void lola_monitor_free(LolaMonitor *m);

// Analyzes a specification and writes the result as JSON: streams, edges,
// memory bounds, evaluation order and efficient monitorability. A zero
// cycle is reported as [`LolaStatus::ZeroCycle`].
//
// # Safety
// `spec` is a NUL-terminated UTF-8 string; `out` is a valid pointer.
LolaStatus lola_analyze_json(const char *spec, uint32_t flags, char **out);

// The last error message on this thread, or null. Valid until the next
// failing call on the same thread; not to be freed.
const char *lola_last_error(void);

// # Safety
// `s` is null or a string returned by this library, not yet freed.
void lola_string_free(char *s);

// Library version, statically allocated.
const char *lola_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOLA_H */
