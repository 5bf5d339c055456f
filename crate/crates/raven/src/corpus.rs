//! Corpus ingestion: vocabulary construction, integer encoding, and
//! generation records.
//!
//! Input text is pre-tokenized and whitespace-separated; this module performs
//! no linguistic tokenization. Token ids are dense 32-bit integers assigned in
//! first-occurrence order. Tokens seen in generations but absent from the
//! training vocabulary get fresh ids above the training range, so two distinct
//! unseen words can never match each other (or anything in training).

use std::collections::HashMap;
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{RavenError, Result};

/// Dense token identifier. Ids below `Vocab::len()` are training tokens;
/// anything at or above is an out-of-vocabulary id minted by an [`OovTable`].
pub type TokenId = u32;

/// Maximum corpus length (in tokens) the 32-bit index layout supports.
pub const MAX_CORPUS_TOKENS: usize = (u32::MAX - 2) as usize;

/// Bijective token-string <-> token-id mapping.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    tokens: Vec<String>,
    lookup: HashMap<String, TokenId>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id for `token`, if the token was seen at build time.
    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.lookup.get(token).copied()
    }

    /// Token string for `id`, if `id` is in range.
    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Rebuild a vocabulary from its token list (e.g. a sidecar vocab file);
    /// token i gets id i.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut vocab = Vocab::new();
        for token in &tokens {
            if token.chars().any(char::is_whitespace) || token.is_empty() {
                return Err(RavenError::WhitespaceToken(token.clone()));
            }
            if vocab.lookup.contains_key(token) {
                return Err(RavenError::InvalidParameter(format!(
                    "duplicate vocabulary token: {token}"
                )));
            }
            vocab.lookup.insert(token.clone(), vocab.tokens.len() as TokenId);
            vocab.tokens.push(token.clone());
        }
        Ok(vocab)
    }

    /// Id for `token`, inserting it with the next free id if absent. Only
    /// meaningful during construction; built vocabularies are read-only.
    pub fn ensure(&mut self, token: &str) -> Result<TokenId> {
        self.intern(token)
    }

    /// Id for `token`, inserting it with the next free id if absent.
    fn intern(&mut self, token: &str) -> Result<TokenId> {
        if let Some(id) = self.lookup.get(token) {
            return Ok(*id);
        }
        if token.chars().any(char::is_whitespace) {
            return Err(RavenError::WhitespaceToken(token.to_string()));
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.lookup.insert(token.to_string(), id);
        Ok(id)
    }
}

/// Integer-encoded corpus with document boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenCorpus {
    /// Concatenated per-document token ids.
    pub ids: Vec<TokenId>,
    /// Offset of each document's first token; first entry is 0.
    pub doc_starts: Vec<usize>,
    /// Size of the vocabulary the ids were encoded against.
    pub vocab_size: usize,
}

impl TokenCorpus {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_docs(&self) -> usize {
        self.doc_starts.len()
    }

    /// Token ids of document `d`.
    pub fn doc(&self, d: usize) -> &[TokenId] {
        let start = self.doc_starts[d];
        let end = if d + 1 < self.doc_starts.len() {
            self.doc_starts[d + 1]
        } else {
            self.ids.len()
        };
        &self.ids[start..end]
    }

    /// Iterator over documents as id slices.
    pub fn docs(&self) -> impl Iterator<Item = &[TokenId]> {
        (0..self.num_docs()).map(|d| self.doc(d))
    }
}

/// One prompt + continuation pair (model output or human baseline).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationRecord {
    pub id: String,
    pub prompt: Vec<TokenId>,
    pub continuation: Vec<TokenId>,
}

/// Fresh ids handed out for tokens missing from the training vocabulary,
/// kept so reports can print the original strings.
#[derive(Debug, Clone)]
pub struct OovTable {
    base: TokenId,
    map: HashMap<String, TokenId>,
    names: Vec<String>,
}

impl OovTable {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            base: vocab_size as TokenId,
            map: HashMap::new(),
            names: Vec::new(),
        }
    }

    /// Fresh id for `token`, reusing the id if the token was seen before.
    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(id) = self.map.get(token) {
            return *id;
        }
        let id = self.base + self.names.len() as TokenId;
        self.map.insert(token.to_string(), id);
        self.names.push(token.to_string());
        id
    }

    /// Id previously minted for `token`, if any.
    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.map.get(token).copied()
    }

    pub fn name(&self, id: TokenId) -> Option<&str> {
        id.checked_sub(self.base)
            .and_then(|i| self.names.get(i as usize))
            .map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Distinct out-of-vocabulary token strings in first-seen order.
    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Resolve `id` against the vocabulary, falling back to the OOV table.
pub fn token_string<'a>(id: TokenId, vocab: &'a Vocab, oov: &'a OovTable) -> &'a str {
    vocab.token(id).or_else(|| oov.name(id)).unwrap_or("<?>")
}

/// Build a vocabulary from a stream of pre-tokenized documents, ids assigned
/// in first-occurrence order.
pub fn build_vocab<I, D, S>(documents: I) -> Result<Vocab>
where
    I: IntoIterator<Item = D>,
    D: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut vocab = Vocab::new();
    let mut saw_token = false;
    for doc in documents {
        for token in doc {
            vocab.intern(token.as_ref())?;
            saw_token = true;
        }
    }
    if !saw_token {
        return Err(RavenError::EmptyCorpus);
    }
    Ok(vocab)
}

/// Encode documents against a fixed vocabulary. Unknown tokens are an error;
/// documents with no tokens are skipped (a document boundary with no content
/// is not a document).
pub fn encode_corpus<I, D, S>(documents: I, vocab: &Vocab) -> Result<TokenCorpus>
where
    I: IntoIterator<Item = D>,
    D: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut ids = Vec::new();
    let mut doc_starts = Vec::new();
    for doc in documents {
        let start = ids.len();
        for token in doc {
            let token = token.as_ref();
            let id = vocab
                .id(token)
                .ok_or_else(|| RavenError::UnknownToken(token.to_string()))?;
            ids.push(id);
        }
        if ids.len() > start {
            doc_starts.push(start);
        }
    }
    if ids.is_empty() {
        return Err(RavenError::EmptyCorpus);
    }
    if ids.len() > MAX_CORPUS_TOKENS {
        return Err(RavenError::CorpusTooLarge(ids.len()));
    }
    Ok(TokenCorpus {
        ids,
        doc_starts,
        vocab_size: vocab.len(),
    })
}

/// Decode a corpus back to per-document token strings. Inverse of
/// [`encode_corpus`] for any corpus produced by it.
pub fn decode_corpus(corpus: &TokenCorpus, vocab: &Vocab) -> Vec<Vec<String>> {
    corpus
        .docs()
        .map(|doc| {
            doc.iter()
                .map(|&id| vocab.token(id).unwrap_or("<?>").to_string())
                .collect()
        })
        .collect()
}

/// How documents are delimited in a raw corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocSep {
    /// One document per (non-blank) line.
    Line,
    /// Documents are blank-line-separated blocks.
    Blank,
}

/// Single-pass ingestion of a raw corpus file: builds the vocabulary in
/// first-occurrence order while encoding, equivalent to [`build_vocab`]
/// followed by [`encode_corpus`] but without materializing the documents.
pub fn ingest_corpus<R: BufRead>(reader: R, sep: DocSep) -> Result<(Vocab, TokenCorpus)> {
    let mut vocab = Vocab::new();
    let mut ids: Vec<TokenId> = Vec::new();
    let mut doc_starts: Vec<usize> = Vec::new();
    let mut doc_open_at: Option<usize> = None;

    for line in reader.lines() {
        let line = line?;
        let blank = line.trim().is_empty();
        match sep {
            DocSep::Line => {
                if blank {
                    continue;
                }
                let start = ids.len();
                for token in line.split_whitespace() {
                    ids.push(vocab.intern(token)?);
                }
                if ids.len() > start {
                    doc_starts.push(start);
                }
            }
            DocSep::Blank => {
                if blank {
                    doc_open_at = None;
                    continue;
                }
                if doc_open_at.is_none() {
                    doc_open_at = Some(ids.len());
                    doc_starts.push(ids.len());
                }
                for token in line.split_whitespace() {
                    ids.push(vocab.intern(token)?);
                }
            }
        }
    }
    // A blank-separated block of blank lines never opens a document, but a
    // trailing header-only block could have opened one with no tokens.
    doc_starts.retain(|&s| s < ids.len());

    if ids.is_empty() {
        return Err(RavenError::EmptyCorpus);
    }
    if ids.len() > MAX_CORPUS_TOKENS {
        return Err(RavenError::CorpusTooLarge(ids.len()));
    }
    let vocab_size = vocab.len();
    Ok((
        vocab,
        TokenCorpus {
            ids,
            doc_starts,
            vocab_size,
        },
    ))
}

#[derive(Deserialize)]
struct RawGeneration {
    id: String,
    #[serde(default)]
    prompt: String,
    continuation: String,
}

/// Load generation records from JSONL: one object per line with string
/// fields `id`, `prompt` (may be empty), and `continuation`, each holding
/// whitespace-separated tokens. Tokens absent from `vocab` are assigned
/// fresh ids recorded in the returned [`OovTable`].
pub fn load_generations<R: BufRead>(
    reader: R,
    vocab: &Vocab,
) -> Result<(Vec<GenerationRecord>, OovTable)> {
    let mut oov = OovTable::new(vocab.len());
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawGeneration =
            serde_json::from_str(&line).map_err(|e| RavenError::MalformedLine {
                line: lineno,
                message: e.to_string(),
            })?;
        let encode = |text: &str, oov: &mut OovTable| -> Vec<TokenId> {
            text.split_whitespace()
                .map(|tok| vocab.id(tok).unwrap_or_else(|| oov.intern(tok)))
                .collect()
        };
        let prompt = encode(&raw.prompt, &mut oov);
        let continuation = encode(&raw.continuation, &mut oov);
        if continuation.is_empty() {
            return Err(RavenError::EmptyContinuation(lineno));
        }
        records.push(GenerationRecord {
            id: raw.id,
            prompt,
            continuation,
        });
    }
    Ok((records, oov))
}

/// Render a record back to whitespace-joined token strings.
pub fn record_to_strings(
    record: &GenerationRecord,
    vocab: &Vocab,
    oov: &OovTable,
) -> (String, String) {
    let join = |ids: &[TokenId]| {
        ids.iter()
            .map(|&id| token_string(id, vocab, oov))
            .collect::<Vec<_>>()
            .join(" ")
    };
    (join(&record.prompt), join(&record.continuation))
}
