//! Exercise the C ABI the way a foreign caller would: through the extern
//! functions, raw pointers, and status codes.

use std::ffi::{CStr, CString};
use std::ptr;

use raven_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(raven_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

fn build_toy_index(dir: &std::path::Path) -> *mut RavenIndex {
    let corpus_path = dir.join("train.txt");
    std::fs::write(&corpus_path, "a b c a b d\nc a b c\n").unwrap();
    let mut handle: *mut RavenIndex = ptr::null_mut();
    let status = unsafe {
        raven_index_build_file(
            c(corpus_path.to_str().unwrap()).as_ptr(),
            false,
            false,
            &mut handle,
        )
    };
    assert!(status == RavenStatus::RavenOk, "{}", last_error());
    assert!(!handle.is_null());
    handle
}

#[test]
fn version_is_exposed() {
    let version = unsafe { CStr::from_ptr(raven_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn build_query_roundtrip() {
    let dir = tempdir();
    let handle = build_toy_index(dir.path());
    unsafe {
        assert_eq!(raven_index_num_tokens(handle), 10);
        assert_eq!(raven_index_num_docs(handle), 2);
        assert_eq!(raven_index_vocab_size(handle), 4);

        let mut found = false;
        assert!(raven_index_contains(handle, c("a b").as_ptr(), &mut found)
            == RavenStatus::RavenOk);
        assert!(found);
        assert!(raven_index_contains(handle, c("d c").as_ptr(), &mut found)
            == RavenStatus::RavenOk);
        assert!(!found, "cross-document bigram must not match");
        assert!(raven_index_contains(handle, c("wug").as_ptr(), &mut found)
            == RavenStatus::RavenOk);
        assert!(!found);

        let mut count = 0u64;
        assert!(raven_index_count(handle, c("a b").as_ptr(), &mut count)
            == RavenStatus::RavenOk);
        assert_eq!(count, 3);

        let mut stats: *mut u32 = ptr::null_mut();
        let mut len = 0usize;
        assert!(raven_index_matching_stats(
            handle,
            c("c a b d").as_ptr(),
            &mut stats,
            &mut len
        ) == RavenStatus::RavenOk);
        assert_eq!(std::slice::from_raw_parts(stats, len), &[1, 2, 3, 4]);
        raven_u32_array_free(stats, len);

        raven_index_free(handle);
    }
}

#[test]
fn save_load_roundtrip() {
    let dir = tempdir();
    let handle = build_toy_index(dir.path());
    let index_path = dir.path().join("toy.idx");
    let path = c(index_path.to_str().unwrap());
    unsafe {
        assert!(raven_index_save(handle, path.as_ptr()) == RavenStatus::RavenOk);
        let mut fp_a = [0i8; 17];
        assert!(
            raven_index_fingerprint(handle, fp_a.as_mut_ptr() as *mut _, fp_a.len())
                == RavenStatus::RavenOk
        );
        raven_index_free(handle);

        let mut loaded: *mut RavenIndex = ptr::null_mut();
        assert!(
            raven_index_load(path.as_ptr(), &mut loaded) == RavenStatus::RavenOk,
            "{}",
            last_error()
        );
        let mut fp_b = [0i8; 17];
        assert!(
            raven_index_fingerprint(loaded, fp_b.as_mut_ptr() as *mut _, fp_b.len())
                == RavenStatus::RavenOk
        );
        assert_eq!(fp_a, fp_b);

        let mut found = false;
        assert!(raven_index_contains(loaded, c("b c").as_ptr(), &mut found)
            == RavenStatus::RavenOk);
        assert!(found);
        raven_index_free(loaded);
    }
}

#[test]
fn pointwise_scores_match_library_semantics() {
    let dir = tempdir();
    let handle = build_toy_index(dir.path());
    unsafe {
        let mut scores: *mut u32 = ptr::null_mut();
        let mut len = 0usize;
        let mut trunc_mean = 0.0f64;
        let status = raven_pointwise_scores(
            handle,
            c("").as_ptr(),
            c("a b d c").as_ptr(),
            RavenSourceMode::RavenTrainingAndContext,
            5,
            &mut scores,
            &mut len,
            &mut trunc_mean,
        );
        assert!(status == RavenStatus::RavenOk, "{}", last_error());
        assert_eq!(std::slice::from_raw_parts(scores, len), &[2, 3, 4, 2]);
        assert!((trunc_mean - 2.75).abs() < 1e-12);
        raven_u32_array_free(scores, len);
        raven_index_free(handle);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut handle: *mut RavenIndex = ptr::null_mut();
        let status = raven_index_build_file(
            c("/nonexistent/corpus.txt").as_ptr(),
            false,
            false,
            &mut handle,
        );
        assert!(status == RavenStatus::RavenNotFound);
        assert!(last_error().contains("not found"), "{}", last_error());
        assert!(handle.is_null());

        let status = raven_index_load(c("/nonexistent/x.idx").as_ptr(), &mut handle);
        assert!(status == RavenStatus::RavenNotFound);

        // empty query is invalid
        let dir = tempdir();
        let handle = build_toy_index(dir.path());
        let mut found = false;
        let status = raven_index_contains(handle, c("").as_ptr(), &mut found);
        assert!(status == RavenStatus::RavenInvalidArgument);
        assert_eq!(last_error(), "empty query");
        raven_index_free(handle);

        // null handle is rejected, not dereferenced
        let status = raven_index_contains(ptr::null(), c("a").as_ptr(), &mut found);
        assert!(status == RavenStatus::RavenInvalidArgument);
    }
}

#[test]
fn corrupt_index_reports_format_error() {
    let dir = tempdir();
    let path = dir.path().join("bad.idx");
    std::fs::write(&path, b"RVNIX1garbage").unwrap();
    std::fs::write(dir.path().join("bad.idx.vocab"), "a\n").unwrap();
    let mut handle: *mut RavenIndex = ptr::null_mut();
    let status =
        unsafe { raven_index_load(c(path.to_str().unwrap()).as_ptr(), &mut handle) };
    assert!(status == RavenStatus::RavenFormatError, "{}", last_error());
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}
