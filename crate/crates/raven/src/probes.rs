//! Lexical probes: check whether assumed-novel word forms (overregularized
//! pasts, nonce CVC words) actually occur in the training corpus.

use std::collections::HashSet;

use crate::corpus::{TokenId, Vocab};
use crate::error::{RavenError, Result};
use crate::index::SuffixIndex;

/// Presence of one probed form in the training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormProbe {
    pub form: String,
    pub present: bool,
    pub count: u64,
}

/// Exact token-match probe. Forms containing whitespace are treated as
/// n-gram queries over their tokens.
pub fn probe_forms(index: &SuffixIndex, vocab: &Vocab, forms: &[String]) -> Result<Vec<FormProbe>> {
    if forms.is_empty() {
        return Err(RavenError::InvalidParameter("no forms to probe".into()));
    }
    forms
        .iter()
        .map(|form| {
            if form.trim().is_empty() {
                return Err(RavenError::InvalidParameter("empty form".into()));
            }
            let count = count_form(index, vocab, form)?;
            Ok(FormProbe {
                form: form.clone(),
                present: count > 0,
                count,
            })
        })
        .collect()
}

fn count_form(index: &SuffixIndex, vocab: &Vocab, form: &str) -> Result<u64> {
    // A token absent from the vocabulary cannot occur in the corpus; encode
    // it as an id beyond the training range so the query simply misses.
    let mut oov_next = vocab.len() as TokenId;
    let ids: Vec<TokenId> = form
        .split_whitespace()
        .map(|tok| {
            vocab.id(tok).unwrap_or_else(|| {
                oov_next += 1;
                oov_next
            })
        })
        .collect();
    index.count_occurrences(&ids)
}

const VOWELS: &str = "aeiou";
/// The 20 consonants used for CVC candidates: everything but the vowels
/// and y.
const CONSONANTS: &str = "bcdfghjklmnpqrstvwxz";

/// A consonant-vowel-consonant nonce candidate with its rule-formed plural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvcPair {
    pub singular: String,
    pub plural: String,
}

/// Plural of a CVC stem: -es after j, s, x, or z; otherwise -s. No consonant
/// doubling.
pub fn pluralize_cvc(word: &str) -> String {
    match word.chars().last() {
        Some('j') | Some('s') | Some('x') | Some('z') => format!("{word}es"),
        _ => format!("{word}s"),
    }
}

/// All C-V-C candidates with plurals, minus exclusions: pairs whose singular
/// or plural is a real word, and pairs whose -es plural becomes a real word
/// when only the final s is removed.
pub fn generate_cvc_candidates(exclusions: &HashSet<String>) -> Vec<CvcPair> {
    let mut pairs = Vec::with_capacity(2000);
    for c1 in CONSONANTS.chars() {
        for v in VOWELS.chars() {
            for c2 in CONSONANTS.chars() {
                let singular: String = [c1, v, c2].iter().collect();
                let plural = pluralize_cvc(&singular);
                if exclusions.contains(&singular) || exclusions.contains(&plural) {
                    continue;
                }
                if plural.ends_with("es") && exclusions.contains(&plural[..plural.len() - 1]) {
                    continue;
                }
                pairs.push(CvcPair { singular, plural });
            }
        }
    }
    pairs
}

/// Which of a pair's forms occur in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvcClass {
    BothPresent,
    SingularOnly,
    /// Not among the classes the presence analysis distinguishes in its
    /// summary tables, but reachable on arbitrary corpora.
    PluralOnly,
    Neither,
}

impl CvcClass {
    pub fn name(&self) -> &'static str {
        match self {
            CvcClass::BothPresent => "both-present",
            CvcClass::SingularOnly => "singular-only",
            CvcClass::PluralOnly => "plural-only",
            CvcClass::Neither => "neither",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvcRow {
    pub pair: CvcPair,
    pub class: CvcClass,
    pub singular_count: u64,
    pub plural_count: u64,
}

/// Classify each pair by exact-token presence of its forms.
pub fn cvc_presence_report(
    index: &SuffixIndex,
    vocab: &Vocab,
    pairs: &[CvcPair],
) -> Result<Vec<CvcRow>> {
    pairs
        .iter()
        .map(|pair| {
            let singular_count = count_form(index, vocab, &pair.singular)?;
            let plural_count = count_form(index, vocab, &pair.plural)?;
            let class = match (singular_count > 0, plural_count > 0) {
                (true, true) => CvcClass::BothPresent,
                (true, false) => CvcClass::SingularOnly,
                (false, true) => CvcClass::PluralOnly,
                (false, false) => CvcClass::Neither,
            };
            Ok(CvcRow {
                pair: pair.clone(),
                class,
                singular_count,
                plural_count,
            })
        })
        .collect()
}
