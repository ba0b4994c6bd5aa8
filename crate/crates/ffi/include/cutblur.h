#ifndef CUTBLUR_H
#define CUTBLUR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  // A required pointer argument was null.
  CB_STATUS_NULL_ARG = 1,
  // The frame text is not a well-formed document.
  CB_STATUS_PARSE = 2,
  // The document parsed but describes an invalid frame.
  CB_STATUS_INVALID_FRAME = 3,
  // A channel or set name is unknown.
  CB_STATUS_UNKNOWN_NAME = 4,
  // A string argument is not valid UTF-8.
  CB_STATUS_UTF8 = 5,
  // The library panicked; the handle arguments should be discarded.
  CB_STATUS_PANIC = 6,
  // The bound is inconsistent or admits too many executions.
  CB_STATUS_BOUND = 7,
} CbStatus;

// A frame's executions within a bound.
typedef struct CbAnalysis CbAnalysis;

// A parsed frame document.
typedef struct CbFrame CbFrame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a frame document. On success `*out` receives a handle to free
// with [`cb_frame_free`].
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum CbStatus cb_frame_from_toml(const char *toml, struct CbFrame **out);

// Releases a frame. Null is ignored.
//
// # Safety
// `frame` must come from [`cb_frame_from_toml`] and not be used afterwards.
void cb_frame_free(struct CbFrame *frame);

// Enumerates the executions of `frame` with at most `bound` events in total
// and, when `per_location` is nonzero, at most that many at any location.
// `total_order` selects totally ordered executions instead of minimal ones.
// The analysis keeps its own copy of the frame.
//
// # Safety
// `frame` must be a live handle and `out` a valid pointer.
enum CbStatus cb_analysis_new(const struct CbFrame *frame,
                              size_t bound,
                              size_t per_location,
                              bool total_order,
                              struct CbAnalysis **out);

// Releases an analysis. Null is ignored.
//
// # Safety
// `analysis` must come from [`cb_analysis_new`] and not be used afterwards.
void cb_analysis_free(struct CbAnalysis *analysis);

// Number of executions within the bound.
//
// # Safety
// `analysis` must be a live handle and `out` a valid pointer.
enum CbStatus cb_analysis_executions(const struct CbAnalysis *analysis, size_t *out);

// Decides whether observing `observed` reveals nothing about `source`.
// Both name a set declared in the frame or list channels separated by
// commas.
//
// # Safety
// `analysis` must be a live handle, the names NUL-terminated strings and
// `holds` a valid pointer.
enum CbStatus cb_no_disclosure(const struct CbAnalysis *analysis,
                               const char *source,
                               const char *observed,
                               bool *holds);

// The local runs on `channels` as a JSON array of strings in run syntax.
// `*out` must be released with [`cb_string_free`].
//
// # Safety
// `analysis` must be a live handle, `channels` a NUL-terminated string and
// `out` a valid pointer.
enum CbStatus cb_runs_json(const struct CbAnalysis *analysis, const char *channels, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void cb_string_free(char *s);

// Description of the last failure on this thread, or an empty string. The
// pointer stays valid until the next call into the library on this thread.
const char *cb_last_error(void);

// Library version as a static NUL-terminated string.
const char *cb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUTBLUR_H */
