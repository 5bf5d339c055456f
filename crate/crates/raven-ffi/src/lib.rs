//! C ABI for the raven corpus-novelty toolkit.
//!
//! Other languages bind against the generated `include/raven.h`. The surface
//! follows the usual opaque-handle pattern: every constructor hands back a
//! `RavenIndex*` that must be released with `raven_index_free`, every
//! fallible call returns a `RavenStatus`, and the message for the most recent
//! failure on the current thread is available from
//! `raven_last_error_message`.
//!
//! Queries take whitespace-separated token strings; tokens unknown to the
//! index vocabulary can never match, mirroring the toolkit's
//! out-of-vocabulary semantics.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use raven::corpus::{OovTable, TokenId, Vocab};
use raven::error::RavenError;
use raven::index::SuffixIndex;
use raven::ngram::{pointwise_scores, AnalysisOptions, SourceMode};
use raven::report::{load_index_and_vocab, sidecar_vocab_path};

/// Opaque handle over a suffix-array index and its vocabulary.
pub struct RavenIndex {
    index: SuffixIndex,
    vocab: Vocab,
}

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum RavenStatus {
    RavenOk = 0,
    RavenInvalidArgument = 1,
    RavenNotFound = 2,
    RavenFormatError = 3,
    RavenIoError = 4,
    RavenInternalError = 5,
}

/// Which duplication sources count for pointwise scores.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum RavenSourceMode {
    RavenTrainingAndContext = 0,
    RavenTrainingOnly = 1,
    RavenContextOnly = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &RavenError) -> RavenStatus {
    match err {
        RavenError::FileNotFound(..) => RavenStatus::RavenNotFound,
        RavenError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            RavenStatus::RavenNotFound
        }
        RavenError::Io(_) => RavenStatus::RavenIoError,
        RavenError::IncompatibleIndex | RavenError::CorruptIndex => RavenStatus::RavenFormatError,
        _ => RavenStatus::RavenInvalidArgument,
    }
}

fn fail(err: &RavenError) -> RavenStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn fail_invalid(message: &str) -> RavenStatus {
    set_error(message);
    RavenStatus::RavenInvalidArgument
}

/// Toolkit version as a static string.
#[no_mangle]
pub extern "C" fn raven_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn raven_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, RavenStatus> {
    if ptr.is_null() {
        return Err(fail_invalid(&format!("{name} must not be null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail_invalid(&format!("{name} is not valid UTF-8")))
}

/// Build an index from a corpus file (tokens whitespace-separated). With
/// `blank_doc_sep` documents are blank-line-separated blocks instead of one
/// per line. On success `*out` owns the handle.
///
/// # Safety
/// `corpus_path` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn raven_index_build_file(
    corpus_path: *const c_char,
    blank_doc_sep: bool,
    allow_cross_doc: bool,
    out: *mut *mut RavenIndex,
) -> RavenStatus {
    if out.is_null() {
        return fail_invalid("out must not be null");
    }
    let path = match cstr_arg(corpus_path, "corpus_path") {
        Ok(p) => PathBuf::from(p),
        Err(status) => return status,
    };
    let sep = if blank_doc_sep {
        raven::corpus::DocSep::Blank
    } else {
        raven::corpus::DocSep::Line
    };
    let build = || -> raven::Result<RavenIndex> {
        if !path.is_file() {
            return Err(RavenError::FileNotFound(
                "corpus",
                path.display().to_string(),
            ));
        }
        let file = std::fs::File::open(&path)?;
        let (vocab, corpus) = raven::corpus::ingest_corpus(std::io::BufReader::new(file), sep)?;
        let index = raven::index::build_index(&corpus, allow_cross_doc)?;
        Ok(RavenIndex { index, vocab })
    };
    match build() {
        Ok(handle) => {
            *out = Box::into_raw(Box::new(handle));
            RavenStatus::RavenOk
        }
        Err(err) => fail(&err),
    }
}

/// Load an index written by `raven_index_save` (or the CLI). Expects the
/// `<path>.vocab` sidecar next to the index file.
///
/// # Safety
/// `index_path` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn raven_index_load(
    index_path: *const c_char,
    out: *mut *mut RavenIndex,
) -> RavenStatus {
    if out.is_null() {
        return fail_invalid("out must not be null");
    }
    let path = match cstr_arg(index_path, "index_path") {
        Ok(p) => PathBuf::from(p),
        Err(status) => return status,
    };
    match load_index_and_vocab(&path) {
        Ok((index, vocab)) => {
            *out = Box::into_raw(Box::new(RavenIndex { index, vocab }));
            RavenStatus::RavenOk
        }
        Err(err) => fail(&err),
    }
}

/// Serialize the index to `path`, plus the `<path>.vocab` sidecar.
///
/// # Safety
/// `handle` must come from a raven constructor; `path` must be a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn raven_index_save(
    handle: *const RavenIndex,
    path: *const c_char,
) -> RavenStatus {
    let Some(handle) = handle.as_ref() else {
        return fail_invalid("handle must not be null");
    };
    let path = match cstr_arg(path, "path") {
        Ok(p) => PathBuf::from(p),
        Err(status) => return status,
    };
    let save = || -> raven::Result<()> {
        handle.index.save(&path)?;
        raven::report::write_vocab(&sidecar_vocab_path(&path), &handle.vocab)?;
        Ok(())
    };
    match save() {
        Ok(()) => RavenStatus::RavenOk,
        Err(err) => fail(&err),
    }
}

/// Release a handle. Passing NULL is a no-op.
///
/// # Safety
/// `handle` must come from a raven constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn raven_index_free(handle: *mut RavenIndex) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of corpus tokens behind the index.
///
/// # Safety
/// `handle` must come from a raven constructor.
#[no_mangle]
pub unsafe extern "C" fn raven_index_num_tokens(handle: *const RavenIndex) -> u64 {
    handle.as_ref().map_or(0, |h| h.index.num_tokens() as u64)
}

/// Number of documents behind the index.
///
/// # Safety
/// `handle` must come from a raven constructor.
#[no_mangle]
pub unsafe extern "C" fn raven_index_num_docs(handle: *const RavenIndex) -> u64 {
    handle.as_ref().map_or(0, |h| h.index.num_docs() as u64)
}

/// Vocabulary size of the indexed corpus.
///
/// # Safety
/// `handle` must come from a raven constructor.
#[no_mangle]
pub unsafe extern "C" fn raven_index_vocab_size(handle: *const RavenIndex) -> u64 {
    handle.as_ref().map_or(0, |h| h.index.vocab_size() as u64)
}

/// Hex SHA-256 fingerprint of the serialized index. `buf` receives up to
/// `buf_len - 1` characters plus a NUL terminator.
///
/// # Safety
/// `handle` must come from a raven constructor; `buf` must point to at least
/// `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn raven_index_fingerprint(
    handle: *const RavenIndex,
    buf: *mut c_char,
    buf_len: usize,
) -> RavenStatus {
    let Some(handle) = handle.as_ref() else {
        return fail_invalid("handle must not be null");
    };
    if buf.is_null() || buf_len == 0 {
        return fail_invalid("buf must not be null or empty");
    }
    let hex = handle.index.fingerprint_hex();
    let take = hex.len().min(buf_len - 1);
    std::ptr::copy_nonoverlapping(hex.as_ptr() as *const c_char, buf, take);
    *buf.add(take) = 0;
    RavenStatus::RavenOk
}

fn encode_query(vocab: &Vocab, text: &str) -> Vec<TokenId> {
    let mut oov = OovTable::new(vocab.len());
    text.split_whitespace()
        .map(|tok| vocab.id(tok).unwrap_or_else(|| oov.intern(tok)))
        .collect()
}

/// Does the whitespace-separated token string occur in the training corpus?
///
/// # Safety
/// `handle` must come from a raven constructor; `query` must be a valid
/// NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn raven_index_contains(
    handle: *const RavenIndex,
    query: *const c_char,
    out: *mut bool,
) -> RavenStatus {
    let Some(handle) = handle.as_ref() else {
        return fail_invalid("handle must not be null");
    };
    if out.is_null() {
        return fail_invalid("out must not be null");
    }
    let text = match cstr_arg(query, "query") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match handle.index.contains(&encode_query(&handle.vocab, text)) {
        Ok(found) => {
            *out = found;
            RavenStatus::RavenOk
        }
        Err(err) => fail(&err),
    }
}

/// Number of occurrences (distinct start offsets) of the query n-gram.
///
/// # Safety
/// Same contract as `raven_index_contains`.
#[no_mangle]
pub unsafe extern "C" fn raven_index_count(
    handle: *const RavenIndex,
    query: *const c_char,
    out: *mut u64,
) -> RavenStatus {
    let Some(handle) = handle.as_ref() else {
        return fail_invalid("handle must not be null");
    };
    if out.is_null() {
        return fail_invalid("out must not be null");
    }
    let text = match cstr_arg(query, "query") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match handle
        .index
        .count_occurrences(&encode_query(&handle.vocab, text))
    {
        Ok(count) => {
            *out = count;
            RavenStatus::RavenOk
        }
        Err(err) => fail(&err),
    }
}

/// Matching statistics of the token stream against the corpus: for each
/// stream position, the length of the longest suffix ending there that
/// occurs in the corpus. On success `*out` points to `*out_len` u32 values;
/// release with `raven_u32_array_free`.
///
/// # Safety
/// `handle` must come from a raven constructor; `stream` must be a valid
/// NUL-terminated string; `out` and `out_len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn raven_index_matching_stats(
    handle: *const RavenIndex,
    stream: *const c_char,
    out: *mut *mut u32,
    out_len: *mut usize,
) -> RavenStatus {
    let Some(handle) = handle.as_ref() else {
        return fail_invalid("handle must not be null");
    };
    if out.is_null() || out_len.is_null() {
        return fail_invalid("out pointers must not be null");
    }
    let text = match cstr_arg(stream, "stream") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match handle
        .index
        .matching_stats(&encode_query(&handle.vocab, text))
    {
        Ok(stats) => {
            let values: Vec<u32> = stats.iter().map(|&v| v as u32).collect();
            emit_u32_array(values, out, out_len);
            RavenStatus::RavenOk
        }
        Err(err) => fail(&err),
    }
}

/// Pointwise duplication scores of a continuation given its prompt: for each
/// continuation token, the size of the smallest novel n-gram ending there.
/// `cap` truncates scores for `*out_truncated_mean` (0 means no cap). On
/// success `*out` points to `*out_len` u32 scores; release with
/// `raven_u32_array_free`.
///
/// # Safety
/// `handle` must come from a raven constructor; `prompt` and `continuation`
/// must be valid NUL-terminated strings; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn raven_pointwise_scores(
    handle: *const RavenIndex,
    prompt: *const c_char,
    continuation: *const c_char,
    mode: RavenSourceMode,
    cap: u64,
    out: *mut *mut u32,
    out_len: *mut usize,
    out_truncated_mean: *mut f64,
) -> RavenStatus {
    let Some(handle) = handle.as_ref() else {
        return fail_invalid("handle must not be null");
    };
    if out.is_null() || out_len.is_null() || out_truncated_mean.is_null() {
        return fail_invalid("out pointers must not be null");
    }
    let prompt_text = match cstr_arg(prompt, "prompt") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let continuation_text = match cstr_arg(continuation, "continuation") {
        Ok(t) => t,
        Err(status) => return status,
    };
    // Prompt and continuation share one OOV table so a repeated unseen token
    // still counts as context duplication.
    let mut oov = OovTable::new(handle.vocab.len());
    let mut encode = |text: &str| -> Vec<TokenId> {
        text.split_whitespace()
            .map(|tok| handle.vocab.id(tok).unwrap_or_else(|| oov.intern(tok)))
            .collect()
    };
    let record = raven::corpus::GenerationRecord {
        id: String::new(),
        prompt: encode(prompt_text),
        continuation: encode(continuation_text),
    };
    if record.continuation.is_empty() {
        return fail_invalid("continuation must contain at least one token");
    }
    let source_mode = match mode {
        RavenSourceMode::RavenTrainingAndContext => SourceMode::TrainingAndContext,
        RavenSourceMode::RavenTrainingOnly => SourceMode::TrainingOnly,
        RavenSourceMode::RavenContextOnly => SourceMode::ContextOnly,
    };
    let cap = (cap > 0).then_some(cap);
    match pointwise_scores(
        &handle.index,
        &record,
        source_mode,
        cap,
        AnalysisOptions::default(),
    ) {
        Ok(series) => {
            *out_truncated_mean = series.truncated_mean;
            let values: Vec<u32> = series.scores.iter().map(|&s| s.min(u32::MAX as u64) as u32).collect();
            emit_u32_array(values, out, out_len);
            RavenStatus::RavenOk
        }
        Err(err) => fail(&err),
    }
}

unsafe fn emit_u32_array(values: Vec<u32>, out: *mut *mut u32, out_len: *mut usize) {
    let mut boxed = values.into_boxed_slice();
    *out_len = boxed.len();
    *out = boxed.as_mut_ptr();
    std::mem::forget(boxed);
}

/// Release an array returned by a raven call.
///
/// # Safety
/// `ptr`/`len` must come from a raven call that documents this releaser.
#[no_mangle]
pub unsafe extern "C" fn raven_u32_array_free(ptr: *mut u32, len: usize) {
    if !ptr.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(ptr, len)));
    }
}
