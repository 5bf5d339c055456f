use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum RavenError {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown token: {0}")]
    UnknownToken(String),

    #[error("token contains whitespace: {0:?}")]
    WhitespaceToken(String),

    #[error("corpus too large for 32-bit token offsets ({0} tokens)")]
    CorpusTooLarge(usize),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("empty continuation at line {0}")]
    EmptyContinuation(usize),

    #[error("empty query")]
    EmptyQuery,

    #[error("empty stream")]
    EmptyStream,

    #[error("incompatible index file")]
    IncompatibleIndex,

    #[error("corrupt index")]
    CorruptIndex,

    #[error("n-gram exceeds continuation prefix (n = {n}, position = {t})")]
    NgramExceedsPrefix { n: usize, t: usize },

    #[error("no records")]
    NoRecords,

    #[error("insufficient length for position profile")]
    InsufficientLength,

    #[error("sentence {sentence}: cyclic heads")]
    CyclicHeads { sentence: usize },

    #[error("sentence {sentence}: invalid head {head} (sentence has {len} words)")]
    InvalidHead { sentence: usize, head: usize, len: usize },

    #[error("structure kind {kind} requires a {needs} parse")]
    KindMismatch { kind: &'static str, needs: &'static str },

    #[error("cannot sample distinct prompts")]
    CannotSampleDistinct,

    #[error("corpus too short: need {need} tokens, have {have}")]
    CorpusTooShort { need: usize, have: usize },

    #[error("{0} not found: {1}")]
    FileNotFound(&'static str, String),

    #[error("{0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RavenError>;
