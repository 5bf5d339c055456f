//! raven — corpus-novelty analysis toolkit.
//!
//! Measures how much generated text duplicates a training corpus: n-gram
//! novelty across sizes, pointwise duplication scores, supercopy detection,
//! syntactic-structure novelty over ingested parses, decoding-parameter
//! sweeps with a toy n-gram language model, and lexical probes for
//! assumed-novel word forms.

pub mod automaton;
pub mod corpus;
pub mod error;
pub mod index;
pub mod lab;
pub mod ngram;
pub mod parse;
pub mod probes;
pub mod report;
pub mod syntax;

pub use corpus::{GenerationRecord, TokenCorpus, TokenId, Vocab};
pub use error::{RavenError, Result};
pub use index::{build_index, SuffixIndex};
pub use ngram::SourceMode;
