#ifndef RAVEN_H
#define RAVEN_H

/* Generated by cbindgen from the raven-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a fallible call.
typedef enum RavenStatus {
  RavenOk = 0,
  RavenInvalidArgument = 1,
  RavenNotFound = 2,
  RavenFormatError = 3,
  RavenIoError = 4,
  RavenInternalError = 5,
} RavenStatus;

// Which duplication sources count for pointwise scores.
typedef enum RavenSourceMode {
  RavenTrainingAndContext = 0,
  RavenTrainingOnly = 1,
  RavenContextOnly = 2,
} RavenSourceMode;

// Opaque handle over a suffix-array index and its vocabulary.
typedef struct RavenIndex RavenIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Toolkit version as a static string.
const char *raven_version(void);

// Message for the most recent failure on this thread. Valid until the next
// failing call on the same thread.
const char *raven_last_error_message(void);

// Build an index from a corpus file (tokens whitespace-separated). With
// `blank_doc_sep` documents are blank-line-separated blocks instead of one
// per line. On success `*out` owns the handle.
//
// # Safety
// `corpus_path` must be a valid NUL-terminated string and `out` a valid
// pointer.
enum RavenStatus raven_index_build_file(const char *corpus_path,
                                        bool blank_doc_sep,
                                        bool allow_cross_doc,
                                        struct RavenIndex **out);

// Load an index written by `raven_index_save` (or the CLI). Expects the
// `<path>.vocab` sidecar next to the index file.
//
// # Safety
// `index_path` must be a valid NUL-terminated string and `out` a valid
// pointer.
enum RavenStatus raven_index_load(const char *index_path, struct RavenIndex **out);

// Serialize the index to `path`, plus the `<path>.vocab` sidecar.
//
// # Safety
// `handle` must come from a raven constructor; `path` must be a valid
// NUL-terminated string.
enum RavenStatus raven_index_save(const struct RavenIndex *handle, const char *path);

// Release a handle. Passing NULL is a no-op.
//
// # Safety
// `handle` must come from a raven constructor and not be used afterwards.
void raven_index_free(struct RavenIndex *handle);

// Number of corpus tokens behind the index.
//
// # Safety
// `handle` must come from a raven constructor.
uint64_t raven_index_num_tokens(const struct RavenIndex *handle);

// Number of documents behind the index.
//
// # Safety
// `handle` must come from a raven constructor.
uint64_t raven_index_num_docs(const struct RavenIndex *handle);

// Vocabulary size of the indexed corpus.
//
// # Safety
// `handle` must come from a raven constructor.
uint64_t raven_index_vocab_size(const struct RavenIndex *handle);

// Hex SHA-256 fingerprint of the serialized index. `buf` receives up to
// `buf_len - 1` characters plus a NUL terminator.
//
// # Safety
// `handle` must come from a raven constructor; `buf` must point to at least
// `buf_len` writable bytes.
enum RavenStatus raven_index_fingerprint(const struct RavenIndex *handle,
                                         char *buf,
                                         uintptr_t buf_len);

// Does the whitespace-separated token string occur in the training corpus?
//
// # Safety
// `handle` must come from a raven constructor; `query` must be a valid
// NUL-terminated string; `out` must be a valid pointer.
enum RavenStatus raven_index_contains(const struct RavenIndex *handle,
                                      const char *query,
                                      bool *out);

// Number of occurrences (distinct start offsets) of the query n-gram.
//
// # Safety
// Same contract as `raven_index_contains`.
enum RavenStatus raven_index_count(const struct RavenIndex *handle,
                                   const char *query,
                                   uint64_t *out);

// Matching statistics of the token stream against the corpus: for each
// stream position, the length of the longest suffix ending there that
// occurs in the corpus. On success `*out` points to `*out_len` u32 values;
// release with `raven_u32_array_free`.
//
// # Safety
// `handle` must come from a raven constructor; `stream` must be a valid
// NUL-terminated string; `out` and `out_len` must be valid pointers.
enum RavenStatus raven_index_matching_stats(const struct RavenIndex *handle,
                                            const char *stream,
                                            uint32_t **out,
                                            uintptr_t *out_len);

// Pointwise duplication scores of a continuation given its prompt: for each
// continuation token, the size of the smallest novel n-gram ending there.
// `cap` truncates scores for `*out_truncated_mean` (0 means no cap). On
// success `*out` points to `*out_len` u32 scores; release with
// `raven_u32_array_free`.
//
// # Safety
// `handle` must come from a raven constructor; `prompt` and `continuation`
// must be valid NUL-terminated strings; out pointers must be valid.
enum RavenStatus raven_pointwise_scores(const struct RavenIndex *handle,
                                        const char *prompt,
                                        const char *continuation,
                                        enum RavenSourceMode mode,
                                        uint64_t cap,
                                        uint32_t **out,
                                        uintptr_t *out_len,
                                        double *out_truncated_mean);

// Release an array returned by a raven call.
//
// # Safety
// `ptr`/`len` must come from a raven call that documents this releaser.
void raven_u32_array_free(uint32_t *ptr, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAVEN_H */
