//! Brute-force oracles and random-instance generators shared by the
//! integration suites. Everything here is deliberately definitional and
//! independent of the library's suffix-array / suffix-automaton code paths:
//! containment is window comparison (with a first-token candidate list to
//! keep suites fast), context duplication is a literal earlier-start scan.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raven::corpus::{GenerationRecord, TokenCorpus, TokenId};
use raven::ngram::SourceMode;

/// Naive containment oracle over the training documents.
pub struct NaiveIndex {
    /// Effective documents: the originals, or their concatenation when span
    /// crossing is allowed.
    pub docs: Vec<Vec<TokenId>>,
    first_token_positions: HashMap<TokenId, Vec<(usize, usize)>>,
}

impl NaiveIndex {
    pub fn new(docs: &[Vec<TokenId>], span_crossing_allowed: bool) -> Self {
        let docs: Vec<Vec<TokenId>> = if span_crossing_allowed {
            vec![docs.concat()]
        } else {
            docs.to_vec()
        };
        let mut first_token_positions: HashMap<TokenId, Vec<(usize, usize)>> = HashMap::new();
        for (d, doc) in docs.iter().enumerate() {
            for (i, &tok) in doc.iter().enumerate() {
                first_token_positions.entry(tok).or_default().push((d, i));
            }
        }
        Self {
            docs,
            first_token_positions,
        }
    }

    /// Occurrence count by checking every candidate window starting with the
    /// query's first token.
    pub fn count(&self, query: &[TokenId]) -> u64 {
        assert!(!query.is_empty());
        let Some(candidates) = self.first_token_positions.get(&query[0]) else {
            return 0;
        };
        candidates
            .iter()
            .filter(|&&(d, i)| {
                let doc = &self.docs[d];
                i + query.len() <= doc.len() && &doc[i..i + query.len()] == query
            })
            .count() as u64
    }

    pub fn contains(&self, query: &[TokenId]) -> bool {
        self.count(query) > 0
    }

    /// Pure quadratic recount, used to cross-check the candidate-list path
    /// on small corpora.
    pub fn count_quadratic(&self, query: &[TokenId]) -> u64 {
        self.docs
            .iter()
            .map(|doc| {
                if doc.len() < query.len() {
                    0
                } else {
                    doc.windows(query.len()).filter(|w| *w == query).count() as u64
                }
            })
            .sum()
    }

    /// Definitional matching statistics: at each position, try every suffix
    /// length from the longest down and report the first hit.
    pub fn matching_stats(&self, stream: &[TokenId]) -> Vec<usize> {
        (0..stream.len())
            .map(|t| {
                (1..=t + 1)
                    .rev()
                    .find(|&l| self.contains(&stream[t + 1 - l..=t]))
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// Does the n-gram of `s` ending at `end` occur at a start offset strictly
/// before its own? The spec's context-duplication rule, checked literally.
pub fn occurs_earlier(s: &[TokenId], n: usize, end: usize) -> bool {
    let own_start = end + 1 - n;
    let gram = &s[own_start..=end];
    (0..own_start).any(|start| &s[start..start + n] == gram)
}

/// Oracle for a single duplication query.
pub fn oracle_is_duplicated(
    naive: &NaiveIndex,
    record: &GenerationRecord,
    n: usize,
    t: usize,
    mode: SourceMode,
) -> bool {
    assert!(n >= 1 && n <= t + 1);
    let gram = &record.continuation[t + 1 - n..=t];
    let full: Vec<TokenId> = record
        .prompt
        .iter()
        .chain(record.continuation.iter())
        .copied()
        .collect();
    let in_training = naive.contains(gram);
    let in_context = occurs_earlier(&full, n, record.prompt.len() + t);
    match mode {
        SourceMode::TrainingAndContext => in_training || in_context,
        SourceMode::TrainingOnly => in_training,
        SourceMode::ContextOnly => in_context,
    }
}

/// Oracle pointwise score: iterate n upward until the first novel n-gram;
/// t + 2 when everything checkable is duplicated. Sped up with shared
/// candidate lists but otherwise definitional.
pub fn oracle_pointwise_score(
    naive: &NaiveIndex,
    record: &GenerationRecord,
    t: usize,
    mode: SourceMode,
) -> u64 {
    for n in 1..=t + 1 {
        if !oracle_is_duplicated(naive, record, n, t, mode) {
            return n as u64;
        }
    }
    (t + 2) as u64
}

/// Oracle novelty counts for one n over one record.
pub fn oracle_novelty_counts(
    naive: &NaiveIndex,
    record: &GenerationRecord,
    n: usize,
    mode: SourceMode,
) -> (u64, u64) {
    let c = record.continuation.len();
    let total = (c + 1).saturating_sub(n) as u64;
    let novel = (n.saturating_sub(1)..c)
        .filter(|&t| !oracle_is_duplicated(naive, record, n, t, mode))
        .count() as u64;
    (total, novel)
}

/// Oracle supercopies: enumerate spans, keep training substrings of length
/// at least `threshold` that cannot be extended in either direction.
pub fn oracle_supercopies(
    naive: &NaiveIndex,
    record: &GenerationRecord,
    threshold: usize,
) -> Vec<(usize, usize, u64)> {
    let c = &record.continuation;
    let mut spans = Vec::new();
    for start in 0..c.len() {
        if start + threshold > c.len() {
            break;
        }
        for end in start + threshold - 1..c.len() {
            if !naive.contains(&c[start..=end]) {
                break;
            }
            let left_max = start == 0 || !naive.contains(&c[start - 1..=end]);
            let right_max = end + 1 == c.len() || !naive.contains(&c[start..=end + 1]);
            if left_max && right_max {
                spans.push((start, end - start + 1, naive.count(&c[start..=end])));
            }
        }
    }
    spans.sort();
    spans
}

/// One random oracle-suite instance: training documents plus one record
/// whose continuation mixes fresh tokens, training copies, and self copies.
pub struct Instance {
    pub docs: Vec<Vec<TokenId>>,
    pub corpus: TokenCorpus,
    pub record: GenerationRecord,
    pub vocab_size: usize,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let vocab_size = rng.random_range(2..=50usize);
    let train_len = if rng.random_range(0..10) == 0 {
        rng.random_range(1000..=5000usize)
    } else {
        rng.random_range(50..=1200usize)
    };
    let num_docs = rng.random_range(1..=5usize);

    // Training text with internal repetition so occurrence counts exceed 1.
    let mut docs: Vec<Vec<TokenId>> = Vec::with_capacity(num_docs);
    let mut produced = 0usize;
    for d in 0..num_docs {
        let remaining_docs = num_docs - d;
        let remaining = train_len.saturating_sub(produced);
        let target = if remaining_docs == 1 {
            remaining.max(1)
        } else {
            (remaining / remaining_docs).max(1)
        };
        let mut doc: Vec<TokenId> = Vec::with_capacity(target);
        while doc.len() < target {
            if !docs.is_empty() && rng.random_range(0..4) == 0 {
                // repeat a span from an earlier document
                let src = &docs[rng.random_range(0..docs.len())];
                let len = copy_len(rng).min(src.len());
                let start = rng.random_range(0..=src.len() - len);
                doc.extend_from_slice(&src[start..start + len]);
            } else if doc.len() > 4 && rng.random_range(0..4) == 0 {
                let len = copy_len(rng).min(doc.len());
                let start = rng.random_range(0..=doc.len() - len);
                let span: Vec<TokenId> = doc[start..start + len].to_vec();
                doc.extend_from_slice(&span);
            } else {
                doc.push(rng.random_range(0..vocab_size) as TokenId);
            }
        }
        doc.truncate(target.max(1));
        produced += doc.len();
        docs.push(doc);
    }

    let corpus = TokenCorpus {
        ids: docs.concat(),
        doc_starts: docs
            .iter()
            .scan(0usize, |acc, d| {
                let start = *acc;
                *acc += d.len();
                Some(start)
            })
            .collect(),
        vocab_size,
    };

    let prompt_len = if rng.random_range(0..3) == 0 {
        rng.random_range(1..=100usize)
    } else {
        0
    };
    let cont_len = rng.random_range(10..=500usize);
    let mut stream: Vec<TokenId> = Vec::with_capacity(prompt_len + cont_len);
    let mut oov_next = vocab_size as TokenId;
    while stream.len() < prompt_len + cont_len {
        match rng.random_range(0..10) {
            0..=3 => {
                // fresh token, occasionally out of vocabulary
                if rng.random_range(0..20) == 0 {
                    stream.push(oov_next);
                    oov_next += 1;
                } else {
                    stream.push(rng.random_range(0..vocab_size) as TokenId);
                }
            }
            4..=7 => {
                let doc = &docs[rng.random_range(0..docs.len())];
                let len = copy_len(rng).min(doc.len());
                let start = rng.random_range(0..=doc.len() - len);
                stream.extend_from_slice(&doc[start..start + len]);
            }
            _ => {
                if stream.is_empty() {
                    stream.push(rng.random_range(0..vocab_size) as TokenId);
                } else {
                    let len = copy_len(rng).min(stream.len());
                    let start = rng.random_range(0..=stream.len() - len);
                    let span: Vec<TokenId> = stream[start..start + len].to_vec();
                    stream.extend_from_slice(&span);
                }
            }
        }
    }
    stream.truncate(prompt_len + cont_len);

    let record = GenerationRecord {
        id: "oracle".into(),
        prompt: stream[..prompt_len].to_vec(),
        continuation: stream[prompt_len..].to_vec(),
    };
    Instance {
        docs,
        corpus,
        record,
        vocab_size,
    }
}

/// Geometric-ish copy length, mean around 8, capped at 50.
fn copy_len(rng: &mut ChaCha8Rng) -> usize {
    let mut len = 1 + rng.random_range(0..4usize);
    while len < 50 && rng.random_range(0..8) != 0 {
        len += rng.random_range(1..4usize);
    }
    len.min(50)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
