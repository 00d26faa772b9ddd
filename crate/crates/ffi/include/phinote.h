#ifndef PHINOTE_H
#define PHINOTE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. The non-zero values 2, 3 and 4 match the CLI exit codes.
typedef enum PhinoteStatus {
  PHINOTE_STATUS_OK = 0,
  // A null pointer, non-UTF-8 string or out-of-range argument.
  PHINOTE_STATUS_INVALID_ARGUMENT = 1,
  // Invalid configuration or malformed input data.
  PHINOTE_STATUS_VALIDATION = 2,
  PHINOTE_STATUS_GATE_FAILED = 3,
  PHINOTE_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  PHINOTE_STATUS_INTERNAL = 5,
} PhinoteStatus;

// Rewrite style for [`phinote_deid_engine_new`].
typedef enum PhinoteStyle {
  PHINOTE_STYLE_SURROGATE = 0,
  PHINOTE_STYLE_PLACEHOLDER = 1,
} PhinoteStyle;

// Concept annotator: term index plus modifier lexicons.
typedef struct PhinoteAnnotator PhinoteAnnotator;

// De-identification engine: surrogate database, detectors and known patients.
typedef struct PhinoteDeidEngine PhinoteDeidEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string. Do not free.
const char *phinote_version(void);

// Message for the last failed call on this thread, or NULL. Free with
// [`phinote_string_free`].
char *phinote_last_error(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a pointer obtained from this library and not yet freed.
void phinote_string_free(char *s);

// Shift a date string by `offset_days` keeping its layout. `note_date`
// (`YYYY-MM-DD`, may be NULL) anchors two-digit years and partial dates.
//
// # Safety
// String arguments must be NULL or NUL-terminated; `out` must be writable.
enum PhinoteStatus phinote_shift_date(const char *text,
                                      int64_t offset_days,
                                      const char *note_date,
                                      char **out);

// Create an engine from a compiled surrogate database (JSON written by
// `phinote build-surrogate-db`).
//
// # Safety
// `surrogate_db_path` must be NUL-terminated; `out` must be writable.
enum PhinoteStatus phinote_deid_engine_new(const char *surrogate_db_path,
                                           uint64_t seed,
                                           enum PhinoteStyle style,
                                           struct PhinoteDeidEngine **out);

// Register a patient from one JSON object in the patients-file schema.
//
// # Safety
// `engine` must come from [`phinote_deid_engine_new`]; no other call may use it concurrently.
enum PhinoteStatus phinote_deid_engine_add_patient(struct PhinoteDeidEngine *engine,
                                                   const char *patient_json);

// Load gazetteer files (one entry per line); any path may be NULL.
//
// # Safety
// As for [`phinote_deid_engine_add_patient`].
enum PhinoteStatus phinote_deid_engine_set_gazetteer(struct PhinoteDeidEngine *engine,
                                                     const char *names_path,
                                                     const char *locations_path,
                                                     const char *organizations_path);

// Use `offset_days` for every patient instead of the seeded offset.
//
// # Safety
// As for [`phinote_deid_engine_add_patient`].
enum PhinoteStatus phinote_deid_engine_set_date_offset(struct PhinoteDeidEngine *engine,
                                                       int64_t offset_days);

// De-identify one note given as a JSON object in the notes-file schema.
// Writes the rewritten record (`note_id`, `text`, `style`, `replacements`) as JSON.
//
// # Safety
// `engine` must be a live engine; `note_json` NUL-terminated; `out_json` writable.
enum PhinoteStatus phinote_deid_note(const struct PhinoteDeidEngine *engine,
                                     const char *note_json,
                                     char **out_json);

// Destroy an engine. NULL is ignored.
//
// # Safety
// `engine` must be NULL or a live engine that is not used afterwards.
void phinote_deid_engine_free(struct PhinoteDeidEngine *engine);

// Create an annotator from a compiled term index (`phinote build-term-index`).
// `lexicon_dir` may be NULL for the built-in trigger lexicons.
//
// # Safety
// Paths must be NULL (where allowed) or NUL-terminated; `out` must be writable.
enum PhinoteStatus phinote_annotator_new(const char *term_index_path,
                                         const char *lexicon_dir,
                                         size_t window_tokens,
                                         struct PhinoteAnnotator **out);

// Annotate one text. Writes a JSON array of NOTE_NLP records numbered from 1.
//
// # Safety
// `annotator` must be live; strings NUL-terminated; `out_json` writable.
enum PhinoteStatus phinote_annotate_text(const struct PhinoteAnnotator *annotator,
                                         const char *note_id,
                                         const char *text,
                                         const char *nlp_date,
                                         char **out_json);

// Destroy an annotator. NULL is ignored.
//
// # Safety
// `annotator` must be NULL or live and not used afterwards.
void phinote_annotator_free(struct PhinoteAnnotator *annotator);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHINOTE_H */
