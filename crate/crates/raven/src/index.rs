//! Suffix-array index over a training corpus.
//!
//! Answers n-gram containment, occurrence counts, and matching statistics in
//! O(|query| log N) per query. Each document is terminated by a sentinel that
//! compares lower than every real token id, and the sentinels are mutually
//! distinct, so a query (which never contains a sentinel) can only match
//! inside a single document unless span crossing was allowed at build time.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::{TokenCorpus, TokenId};
use crate::error::{RavenError, Result};

mod sais;

const MAGIC: &[u8; 6] = b"RVNIX1";
const VERSION: u32 = 1;
const FLAG_SPAN_CROSSING: u32 = 1;

/// Immutable suffix-array index over a [`TokenCorpus`].
#[derive(Debug, Clone)]
pub struct SuffixIndex {
    /// Corpus in query space: real ids shifted up by `shift`, with one
    /// sentinel (value < `shift`) after each document. The final element is
    /// the unique minimum of the whole array.
    text: Vec<u32>,
    /// Suffix start offsets of `text`, sorted by suffix lexicographic order.
    sa: Vec<u32>,
    shift: u32,
    vocab_size: u32,
    num_docs: u32,
    span_crossing_allowed: bool,
    fingerprint: [u8; 32],
}

/// Build a [`SuffixIndex`] over `corpus`. With `span_crossing_allowed` the
/// documents are concatenated and queries may match across boundaries.
pub fn build_index(corpus: &TokenCorpus, span_crossing_allowed: bool) -> Result<SuffixIndex> {
    if corpus.is_empty() {
        return Err(RavenError::EmptyCorpus);
    }
    let n = corpus.len();
    let d = corpus.num_docs();
    if n as u64 + d as u64 + 1 >= u32::MAX as u64
        || corpus.vocab_size as u64 + d as u64 + 1 >= u32::MAX as u64
    {
        return Err(RavenError::CorpusTooLarge(n));
    }

    let (shift, text) = if span_crossing_allowed {
        let shift = 1u32;
        let mut text: Vec<u32> = Vec::with_capacity(n + 1);
        text.extend(corpus.ids.iter().map(|&id| id + shift));
        text.push(0);
        (shift, text)
    } else {
        let shift = d as u32 + 1;
        let mut text: Vec<u32> = Vec::with_capacity(n + d);
        for (j, doc) in corpus.docs().enumerate() {
            text.extend(doc.iter().map(|&id| id + shift));
            // Sentinels descend so the final one (value 1) is the unique
            // minimum of the array, which the suffix sorter requires.
            text.push((d - j) as u32);
        }
        (shift, text)
    };

    let sa = sais::suffix_array(&text);
    let mut index = SuffixIndex {
        text,
        sa,
        shift,
        vocab_size: corpus.vocab_size as u32,
        num_docs: d as u32,
        span_crossing_allowed,
        fingerprint: [0; 32],
    };
    let mut hasher = Sha256::new();
    index.write_body(&mut hasher)?;
    index.fingerprint = hasher.finalize().into();
    Ok(index)
}

impl SuffixIndex {
    /// True iff `query` occurs as a contiguous run inside a single document
    /// (or anywhere, if span crossing was allowed at build time).
    pub fn contains(&self, query: &[TokenId]) -> Result<bool> {
        if query.is_empty() {
            return Err(RavenError::EmptyQuery);
        }
        Ok(self.count_raw(query) > 0)
    }

    /// Number of distinct start offsets where `query` occurs; occurrences may
    /// overlap.
    pub fn count_occurrences(&self, query: &[TokenId]) -> Result<u64> {
        if query.is_empty() {
            return Err(RavenError::EmptyQuery);
        }
        Ok(self.count_raw(query))
    }

    /// Matching statistics of `stream` against the index: `out[t]` is the
    /// length of the longest suffix of `stream[..=t]` that [`Self::contains`]
    /// accepts. Satisfies `out[t + 1] <= out[t] + 1`.
    pub fn matching_stats(&self, stream: &[TokenId]) -> Result<Vec<usize>> {
        if stream.is_empty() {
            return Err(RavenError::EmptyStream);
        }
        let mut out = Vec::with_capacity(stream.len());
        let mut len = 0usize;
        for t in 0..stream.len() {
            len += 1;
            while len > 0 && self.count_raw(&stream[t + 1 - len..=t]) == 0 {
                len -= 1;
            }
            out.push(len);
        }
        Ok(out)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size as usize
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs as usize
    }

    /// Number of real corpus tokens (sentinels excluded).
    pub fn num_tokens(&self) -> usize {
        if self.span_crossing_allowed {
            self.text.len() - 1
        } else {
            self.text.len() - self.num_docs as usize
        }
    }

    pub fn span_crossing_allowed(&self) -> bool {
        self.span_crossing_allowed
    }

    /// SHA-256 of the serialized index.
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        self.fingerprint.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Suffix order restricted to real token positions, reported as offsets
    /// into the original id sequence (sentinel suffixes skipped).
    pub fn suffix_order(&self) -> Vec<u32> {
        // sentinel count before each text position
        let mut sentinels_before = Vec::with_capacity(self.text.len());
        let mut seen = 0u32;
        for &c in &self.text {
            sentinels_before.push(seen);
            if c < self.shift {
                seen += 1;
            }
        }
        self.sa
            .iter()
            .filter(|&&p| self.text[p as usize] >= self.shift)
            .map(|&p| p - sentinels_before[p as usize])
            .collect()
    }

    fn count_raw(&self, query: &[TokenId]) -> u64 {
        let Some(shifted) = self.shift_query(query) else {
            return 0;
        };
        let (lo, hi) = self.sa_range(&shifted);
        (hi - lo) as u64
    }

    fn shift_query(&self, query: &[TokenId]) -> Option<Vec<u32>> {
        query.iter().map(|&t| t.checked_add(self.shift)).collect()
    }

    fn sa_range(&self, shifted: &[u32]) -> (usize, usize) {
        let lo = self
            .sa
            .partition_point(|&p| self.cmp_suffix(p as usize, shifted) == Ordering::Less);
        let hi = self
            .sa
            .partition_point(|&p| self.cmp_suffix(p as usize, shifted) != Ordering::Greater);
        (lo, hi)
    }

    /// Compare the suffix starting at `p` against `query`, considering only
    /// the first `query.len()` elements (Equal means the query is a prefix).
    fn cmp_suffix(&self, p: usize, query: &[u32]) -> Ordering {
        for (i, &qc) in query.iter().enumerate() {
            match self.text.get(p + i) {
                None => return Ordering::Less,
                Some(&tc) => match tc.cmp(&qc) {
                    Ordering::Equal => {}
                    other => return other,
                },
            }
        }
        Ordering::Equal
    }

    /// Serialize to `path`. The format is stable and little-endian; byte
    /// identity of the output is guaranteed for identical corpora.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut writer = BufWriter::new(file);
        self.write_body(&mut writer)?;
        writer.write_all(&self.fingerprint)?;
        writer.flush()?;
        Ok(())
    }

    fn write_body<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let flags = if self.span_crossing_allowed {
            FLAG_SPAN_CROSSING
        } else {
            0
        };
        w.write_all(&flags.to_le_bytes())?;
        w.write_all(&self.vocab_size.to_le_bytes())?;
        w.write_all(&self.num_docs.to_le_bytes())?;
        w.write_all(&(self.text.len() as u64).to_le_bytes())?;
        write_u32s(w, &self.text)?;
        write_u32s(w, &self.sa)?;
        Ok(())
    }

    /// Load an index written by [`Self::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<SuffixIndex> {
        let file = File::open(path)?;
        let mut reader = HashingReader::new(BufReader::new(file));

        let mut magic = [0u8; 6];
        reader.read_exact(&mut magic).map_err(corrupt)?;
        if &magic != MAGIC {
            return Err(RavenError::IncompatibleIndex);
        }
        let version = read_u32(&mut reader)?;
        if version != VERSION {
            return Err(RavenError::IncompatibleIndex);
        }
        let flags = read_u32(&mut reader)?;
        let vocab_size = read_u32(&mut reader)?;
        let num_docs = read_u32(&mut reader)?;
        let text_len = read_u64(&mut reader)?;
        if text_len == 0 || text_len >= u32::MAX as u64 {
            return Err(RavenError::CorruptIndex);
        }
        let text = read_u32s(&mut reader, text_len as usize)?;
        let sa = read_u32s(&mut reader, text_len as usize)?;

        let expected: [u8; 32] = reader.digest();
        let mut stored = [0u8; 32];
        reader.read_exact(&mut stored).map_err(corrupt)?;
        if stored != expected {
            return Err(RavenError::CorruptIndex);
        }

        let span_crossing_allowed = flags & FLAG_SPAN_CROSSING != 0;
        let shift = if span_crossing_allowed {
            1
        } else {
            num_docs + 1
        };
        Ok(SuffixIndex {
            text,
            sa,
            shift,
            vocab_size,
            num_docs,
            span_crossing_allowed,
            fingerprint: stored,
        })
    }
}

fn corrupt(_: std::io::Error) -> RavenError {
    RavenError::CorruptIndex
}

fn write_u32s<W: Write>(w: &mut W, values: &[u32]) -> Result<()> {
    let mut buf = [0u8; 4096 * 4];
    for chunk in values.chunks(4096) {
        for (i, v) in chunk.iter().enumerate() {
            buf[i * 4..i * 4 + 4].copy_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf[..chunk.len() * 4])?;
    }
    Ok(())
}

fn read_u32s<R: Read>(r: &mut R, count: usize) -> Result<Vec<u32>> {
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 4096 * 4];
    let mut remaining = count;
    while remaining > 0 {
        let take = remaining.min(4096);
        r.read_exact(&mut buf[..take * 4]).map_err(corrupt)?;
        for i in 0..take {
            values.push(u32::from_le_bytes(buf[i * 4..i * 4 + 4].try_into().unwrap()));
        }
        remaining -= take;
    }
    Ok(values)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(corrupt)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(corrupt)?;
    Ok(u64::from_le_bytes(b))
}

/// Reader that hashes everything read through it, so the trailing checksum
/// can be verified without a second pass.
struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> HashingReader<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
        }
    }

    fn digest(&self) -> [u8; 32] {
        self.hasher.clone().finalize().into()
    }
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}
