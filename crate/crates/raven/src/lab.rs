//! Decode lab: a Lidstone-smoothed n-gram language model with simple backoff,
//! the top-k / top-p / temperature decoding transforms, a sliding-window
//! perplexity evaluator, and the novelty-quality tradeoff sweep.
//!
//! The LM is a controllable stand-in scorer, not a competitive model; it
//! exists so decoding effects on duplication can be reproduced at desk scale.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{GenerationRecord, TokenCorpus, TokenId};
use crate::error::{RavenError, Result};
use crate::index::SuffixIndex;
use crate::ngram::{self, AnalysisOptions, SourceMode};

/// Anything that can score a token given the visible preceding window.
pub trait Scorer {
    /// Natural log of P(token | context).
    fn log_prob(&self, context: &[TokenId], token: TokenId) -> f64;
}

/// Uniform distribution over a fixed vocabulary; handy as a reference scorer.
pub struct UniformScorer {
    pub vocab_size: usize,
}

impl Scorer for UniformScorer {
    fn log_prob(&self, _context: &[TokenId], _token: TokenId) -> f64 {
        -(self.vocab_size as f64).ln()
    }
}

#[derive(Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<TokenId, u64>,
}

/// Additively smoothed n-gram LM with backoff to shorter contexts.
///
/// P(w | ctx) = (count(ctx·w) + alpha) / (count(ctx·) + alpha·V), using the
/// longest context suffix with count(ctx·) > 0, down to the unigram table.
pub struct NGramLM {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    /// tables[len] maps contexts of that length to next-token counts.
    tables: Vec<HashMap<Box<[TokenId]>, ContextCounts>>,
    corpus_fingerprint: u64,
}

pub fn train_ngram_lm(corpus: &TokenCorpus, order: usize, alpha: f64) -> Result<NGramLM> {
    if corpus.is_empty() {
        return Err(RavenError::EmptyCorpus);
    }
    if order == 0 {
        return Err(RavenError::InvalidParameter("order must be at least 1".into()));
    }
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(RavenError::InvalidParameter(
            "smoothing constant alpha must be positive".into(),
        ));
    }
    let mut tables: Vec<HashMap<Box<[TokenId]>, ContextCounts>> =
        (0..order).map(|_| HashMap::new()).collect();
    for doc in corpus.docs() {
        for pos in 0..doc.len() {
            for ctx_len in 0..order.min(pos + 1) {
                let ctx = &doc[pos - ctx_len..pos];
                let entry = tables[ctx_len].entry(ctx.into()).or_default();
                entry.total += 1;
                *entry.next.entry(doc[pos]).or_default() += 1;
            }
        }
    }
    Ok(NGramLM {
        order,
        alpha,
        vocab_size: corpus.vocab_size,
        tables,
        corpus_fingerprint: corpus_fingerprint(corpus),
    })
}

fn corpus_fingerprint(corpus: &TokenCorpus) -> u64 {
    let mut hasher = Sha256::new();
    for &id in &corpus.ids {
        hasher.update(id.to_le_bytes());
    }
    for &s in &corpus.doc_starts {
        hasher.update((s as u64).to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Identifies the training split; equal fingerprints mean equal corpora.
    pub fn corpus_fingerprint(&self) -> u64 {
        self.corpus_fingerprint
    }

    /// Longest context suffix with observations, down to the empty context.
    fn backoff_counts(&self, history: &[TokenId]) -> &ContextCounts {
        let max_len = (self.order - 1).min(history.len());
        for len in (1..=max_len).rev() {
            let ctx = &history[history.len() - len..];
            if let Some(counts) = self.tables[len].get(ctx) {
                return counts;
            }
        }
        self.tables[0]
            .get(&[] as &[TokenId])
            .expect("unigram table is populated for a nonempty corpus")
    }

    /// Next-token distribution over the full vocabulary.
    pub fn dist(&self, history: &[TokenId]) -> Vec<f64> {
        let counts = self.backoff_counts(history);
        let denom = counts.total as f64 + self.alpha * self.vocab_size as f64;
        let mut dist = vec![self.alpha / denom; self.vocab_size];
        for (&tok, &cnt) in &counts.next {
            dist[tok as usize] += cnt as f64 / denom;
        }
        dist
    }
}

impl Scorer for NGramLM {
    fn log_prob(&self, context: &[TokenId], token: TokenId) -> f64 {
        let counts = self.backoff_counts(context);
        let denom = counts.total as f64 + self.alpha * self.vocab_size as f64;
        let count = counts.next.get(&token).copied().unwrap_or(0);
        ((count as f64 + self.alpha) / denom).ln()
    }
}

/// Decoding knobs. Defaults leave the distribution untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    /// Keep only the k most probable tokens; `None` means no truncation.
    #[serde(default)]
    pub top_k: Option<u32>,
    /// Keep the smallest head of the distribution with cumulative mass >= p.
    #[serde(default = "one")]
    pub top_p: f64,
    /// Exponent 1/T applied to probabilities before renormalizing.
    #[serde(default = "one")]
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            top_k: None,
            top_p: 1.0,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl DecodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == Some(0) {
            return Err(RavenError::InvalidParameter("top_k must be positive".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(RavenError::InvalidParameter(
                "top_p must be in (0, 1]".into(),
            ));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(RavenError::InvalidParameter(
                "temperature must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Compact human-readable form used in report rows.
    pub fn label(&self) -> String {
        let k = self
            .top_k
            .map_or("inf".to_string(), |k| k.to_string());
        format!(
            "k={k},p={},T={},seed={}",
            self.top_p, self.temperature, self.seed
        )
    }
}

/// Apply temperature, then top-k, then top-p to a probability vector.
/// Identity settings short-circuit, so they are exact identities.
pub fn apply_decoding(dist: &[f64], cfg: &DecodingConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut probs = dist.to_vec();

    if cfg.temperature != 1.0 {
        let inv_t = 1.0 / cfg.temperature;
        for p in &mut probs {
            *p = p.powf(inv_t);
        }
        renormalize(&mut probs);
    }

    if let Some(k) = cfg.top_k {
        let k = k as usize;
        if k < probs.len() {
            let order = ranked(&probs);
            let mut kept = vec![false; probs.len()];
            for &i in order.iter().take(k) {
                kept[i] = true;
            }
            for (i, p) in probs.iter_mut().enumerate() {
                if !kept[i] {
                    *p = 0.0;
                }
            }
            renormalize(&mut probs);
        }
    }

    if cfg.top_p < 1.0 {
        let order = ranked(&probs);
        let mut kept = vec![false; probs.len()];
        let mut mass = 0.0;
        for &i in &order {
            kept[i] = true;
            mass += probs[i];
            if mass >= cfg.top_p {
                break;
            }
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !kept[i] {
                *p = 0.0;
            }
        }
        renormalize(&mut probs);
    }

    Ok(probs)
}

/// Ranking shared by top-k and top-p: probability descending, ties broken by
/// ascending token id.
fn ranked(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn renormalize(probs: &mut [f64]) {
    let sum: f64 = probs.iter().sum();
    if sum > 0.0 {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    }
}

/// Autoregressive sampling from the decoded LM distribution. Deterministic
/// given the seed; `top_k == Some(1)` reduces to greedy argmax regardless of
/// the seed.
pub fn sample_continuation(
    lm: &NGramLM,
    prompt: &[TokenId],
    length: usize,
    cfg: &DecodingConfig,
) -> Result<GenerationRecord> {
    if length == 0 {
        return Err(RavenError::InvalidParameter(
            "continuation length must be at least 1".into(),
        ));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history: Vec<TokenId> = prompt.to_vec();
    let mut continuation = Vec::with_capacity(length);
    for _ in 0..length {
        let decoded = apply_decoding(&lm.dist(&history), cfg)?;
        let token = sample_from(&decoded, rng.random::<f64>());
        history.push(token);
        continuation.push(token);
    }
    Ok(GenerationRecord {
        id: String::new(),
        prompt: prompt.to_vec(),
        continuation,
    })
}

fn sample_from(probs: &[f64], u: f64) -> TokenId {
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_nonzero = i;
            if u < acc {
                return i as TokenId;
            }
        }
    }
    last_nonzero as TokenId
}

/// Evaluation window sizes for [`sliding_perplexity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerplexityConfig {
    /// Context carried over from before each evaluated segment.
    pub stride: usize,
    /// Length of each evaluated segment.
    pub max_len: usize,
}

impl Default for PerplexityConfig {
    fn default() -> Self {
        Self {
            stride: 512,
            max_len: 1024,
        }
    }
}

/// Perplexity of `tokens` evaluated in consecutive segments of `max_len`,
/// each conditioned on the previous `stride` tokens of context. The first
/// segment is conditioned on nothing before the sequence start, so sequences
/// up to `max_len` long are scored exactly as a direct computation would.
pub fn sliding_perplexity(
    scorer: &dyn Scorer,
    tokens: &[TokenId],
    cfg: &PerplexityConfig,
) -> Result<f64> {
    let (nll, count) = sliding_nll(scorer, tokens, cfg)?;
    Ok((nll / count as f64).exp())
}

/// Summed negative log probability and token count under the sliding-window
/// protocol; the building block pooled by the sweep.
pub fn sliding_nll(
    scorer: &dyn Scorer,
    tokens: &[TokenId],
    cfg: &PerplexityConfig,
) -> Result<(f64, usize)> {
    if tokens.is_empty() {
        return Err(RavenError::EmptyStream);
    }
    if cfg.stride == 0 || cfg.max_len == 0 {
        return Err(RavenError::InvalidParameter(
            "stride and max_len must be positive".into(),
        ));
    }
    if cfg.stride > cfg.max_len {
        return Err(RavenError::InvalidParameter(
            "stride must not exceed max_len".into(),
        ));
    }
    let mut nll = 0.0;
    for segment_start in (0..tokens.len()).step_by(cfg.max_len) {
        let segment_end = (segment_start + cfg.max_len).min(tokens.len());
        let context_start = segment_start.saturating_sub(cfg.stride);
        for i in segment_start..segment_end {
            nll -= scorer.log_prob(&tokens[context_start..i], tokens[i]);
        }
    }
    Ok((nll, tokens.len()))
}

/// One row of the novelty-quality tradeoff table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub config: DecodingConfig,
    /// Mean truncated pointwise duplication over all sampled tokens.
    pub dup_trunc: f64,
    /// Sliding perplexity of the samples under the held-out scorer.
    pub ppl: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

/// Per-prompt seed derivation: keeps prompts independent while staying
/// deterministic for a given config seed.
fn prompt_seed(base: u64, prompt_index: usize) -> u64 {
    base.wrapping_add((prompt_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// For each config in the grid: sample one continuation per prompt, score the
/// pooled truncated duplication against `index`, and evaluate perplexity with
/// the held-out `scorer` LM. Emits a contamination warning when the scorer
/// was trained on the generator's split.
#[allow(clippy::too_many_arguments)]
pub fn tradeoff_sweep(
    lm: &NGramLM,
    index: &SuffixIndex,
    prompts: &[Vec<TokenId>],
    grid: &[DecodingConfig],
    cap: Option<u64>,
    continuation_len: usize,
    scorer: &NGramLM,
    ppl_cfg: &PerplexityConfig,
    mode: SourceMode,
) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(RavenError::InvalidParameter("empty decoding grid".into()));
    }
    if prompts.is_empty() {
        return Err(RavenError::NoRecords);
    }
    let mut warnings = Vec::new();
    if scorer.corpus_fingerprint() == lm.corpus_fingerprint() {
        warnings.push("perplexity proxy contaminated: evaluator trained on the generator's split".into());
    }

    let rows = grid
        .par_iter()
        .map(|cfg| -> Result<SweepRow> {
            let mut dup_sum = 0.0;
            let mut dup_count = 0u64;
            let mut nll_sum = 0.0;
            let mut nll_count = 0usize;
            for (i, prompt) in prompts.iter().enumerate() {
                let per_prompt = DecodingConfig {
                    seed: prompt_seed(cfg.seed, i),
                    ..*cfg
                };
                let mut record = sample_continuation(lm, prompt, continuation_len, &per_prompt)?;
                record.id = format!("{}-p{}", cfg.label(), i);
                let series = pointwise(index, &record, mode, cap)?;
                dup_sum += series.truncated_mean * series.scores.len() as f64;
                dup_count += series.scores.len() as u64;
                let (nll, count) = sliding_nll(scorer, &record.continuation, ppl_cfg)?;
                nll_sum += nll;
                nll_count += count;
            }
            Ok(SweepRow {
                config: *cfg,
                dup_trunc: dup_sum / dup_count as f64,
                ppl: (nll_sum / nll_count as f64).exp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome { rows, warnings })
}

fn pointwise(
    index: &SuffixIndex,
    record: &GenerationRecord,
    mode: SourceMode,
    cap: Option<u64>,
) -> Result<ngram::DuplicationSeries> {
    ngram::pointwise_scores(index, record, mode, cap, AnalysisOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, encode_corpus};

    fn abab() -> TokenCorpus {
        let docs = vec![vec!["a", "b", "a", "b"]];
        let vocab = build_vocab(docs.clone()).unwrap();
        encode_corpus(docs, &vocab).unwrap()
    }

    #[test]
    fn bigram_counts_match_hand_computation() {
        let lm = train_ngram_lm(&abab(), 2, 1.0).unwrap();
        // P(b | a) = (2 + 1) / (2 + 2), P(a | a) = (0 + 1) / (2 + 2)
        let dist = lm.dist(&[0]);
        assert!((dist[1] - 0.75).abs() < 1e-12);
        assert!((dist[0] - 0.25).abs() < 1e-12);
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distributions_sum_to_one_for_any_context() {
        let lm = train_ngram_lm(&abab(), 3, 0.5).unwrap();
        for history in [vec![], vec![0], vec![1, 0], vec![0, 1], vec![5, 5, 5]] {
            let dist = lm.dist(&history);
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{history:?}");
        }
    }

    #[test]
    fn backoff_reaches_unigram_for_unseen_context() {
        let lm = train_ngram_lm(&abab(), 2, 1.0).unwrap();
        // context "b b" never occurs; unigram counts are a:2, b:2 of 4
        let dist = lm.dist(&[1, 1]);
        let direct = lm.dist(&[1]);
        // context "b" was seen (followed by "a" once)
        assert!((direct[0] - 2.0 / 3.0).abs() < 1e-12);
        // unseen longer context backs off to the "b" table as its longest
        // observed suffix
        assert_eq!(dist, direct);
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(train_ngram_lm(&abab(), 2, 0.0).is_err());
        assert!(train_ngram_lm(&abab(), 2, -1.0).is_err());
    }

    #[test]
    fn top_k_keeps_largest_and_renormalizes() {
        let cfg = DecodingConfig {
            top_k: Some(2),
            ..Default::default()
        };
        let out = apply_decoding(&[0.5, 0.3, 0.2], &cfg).unwrap();
        assert!((out[0] - 0.625).abs() < 1e-12);
        assert!((out[1] - 0.375).abs() < 1e-12);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn top_p_smallest_prefix_reaching_mass() {
        let cfg = DecodingConfig {
            top_p: 0.7,
            ..Default::default()
        };
        let out = apply_decoding(&[0.5, 0.3, 0.2], &cfg).unwrap();
        assert!((out[0] - 0.625).abs() < 1e-12);
        assert!((out[1] - 0.375).abs() < 1e-12);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn identity_configuration_is_exact() {
        let dist = [0.5, 0.3, 0.2];
        let out = apply_decoding(&dist, &DecodingConfig::default()).unwrap();
        assert_eq!(out, dist.to_vec());
        let cfg = DecodingConfig {
            top_k: Some(3),
            top_p: 1.0,
            temperature: 1.0,
            seed: 7,
        };
        assert_eq!(apply_decoding(&dist, &cfg).unwrap(), dist.to_vec());
    }

    #[test]
    fn temperature_reshapes_mass() {
        let cfg = DecodingConfig {
            temperature: 0.5,
            ..Default::default()
        };
        // squaring: 0.25, 0.09, 0.04 -> renormalized
        let out = apply_decoding(&[0.5, 0.3, 0.2], &cfg).unwrap();
        let z = 0.25 + 0.09 + 0.04;
        assert!((out[0] - 0.25 / z).abs() < 1e-12);
        assert!((out[2] - 0.04 / z).abs() < 1e-12);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ties_break_by_smaller_token_id() {
        let cfg = DecodingConfig {
            top_k: Some(1),
            ..Default::default()
        };
        let out = apply_decoding(&[0.4, 0.4, 0.2], &cfg).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let dist = [1.0];
        for cfg in [
            DecodingConfig { top_k: Some(0), ..Default::default() },
            DecodingConfig { top_p: 0.0, ..Default::default() },
            DecodingConfig { top_p: -0.5, ..Default::default() },
            DecodingConfig { temperature: 0.0, ..Default::default() },
            DecodingConfig { temperature: -1.0, ..Default::default() },
        ] {
            assert!(apply_decoding(&dist, &cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn greedy_is_seed_independent() {
        let lm = train_ngram_lm(&abab(), 2, 0.1).unwrap();
        let a = sample_continuation(
            &lm,
            &[0],
            10,
            &DecodingConfig { top_k: Some(1), seed: 1, ..Default::default() },
        )
        .unwrap();
        let b = sample_continuation(
            &lm,
            &[0],
            10,
            &DecodingConfig { top_k: Some(1), seed: 99, ..Default::default() },
        )
        .unwrap();
        assert_eq!(a.continuation, b.continuation);
    }

    #[test]
    fn greedy_equals_argmax_sequence() {
        let lm = train_ngram_lm(&abab(), 2, 0.1).unwrap();
        let record = sample_continuation(
            &lm,
            &[0],
            8,
            &DecodingConfig { top_k: Some(1), ..Default::default() },
        )
        .unwrap();
        let mut history = vec![0u32];
        let mut expected = Vec::new();
        for _ in 0..8 {
            let dist = lm.dist(&history);
            let argmax = dist
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| a.partial_cmp(b).unwrap().then(j.cmp(i)))
                .unwrap()
                .0 as TokenId;
            history.push(argmax);
            expected.push(argmax);
        }
        assert_eq!(record.continuation, expected);
    }

    #[test]
    fn same_seed_same_output() {
        let lm = train_ngram_lm(&abab(), 2, 0.5).unwrap();
        let cfg = DecodingConfig { seed: 42, ..Default::default() };
        let a = sample_continuation(&lm, &[], 20, &cfg).unwrap();
        let b = sample_continuation(&lm, &[], 20, &cfg).unwrap();
        assert_eq!(a.continuation, b.continuation);
    }

    #[test]
    fn full_support_sampling_tracks_lm_frequencies() {
        let lm = train_ngram_lm(&abab(), 1, 1.0).unwrap();
        // unigram model: P(a) = P(b) = (2 + 1) / (4 + 2) = 0.5
        let cfg = DecodingConfig { seed: 3, ..Default::default() };
        let record = sample_continuation(&lm, &[], 10_000, &cfg).unwrap();
        let count_a = record.continuation.iter().filter(|&&t| t == 0).count() as f64;
        let p: f64 = 0.5;
        let sigma = (10_000.0_f64 * p * (1.0 - p)).sqrt();
        assert!((count_a - 5_000.0).abs() < 3.0 * sigma, "count_a = {count_a}");
    }

    #[test]
    fn uniform_scorer_perplexity_is_vocab_size() {
        let scorer = UniformScorer { vocab_size: 4 };
        let ppl = sliding_perplexity(&scorer, &[0, 1, 2, 3, 0, 1], &Default::default()).unwrap();
        assert!((ppl - 4.0).abs() < 1e-9);
    }

    #[test]
    fn single_segment_equals_direct_computation() {
        let lm = train_ngram_lm(&abab(), 2, 0.3).unwrap();
        let tokens: Vec<TokenId> = (0..100).map(|i| (i % 2) as TokenId).collect();
        let cfg = PerplexityConfig::default();
        let sliding = sliding_perplexity(&lm, &tokens, &cfg).unwrap();
        let mut nll = 0.0;
        for i in 0..tokens.len() {
            nll -= lm.log_prob(&tokens[..i], tokens[i]);
        }
        let direct = (nll / tokens.len() as f64).exp();
        assert_eq!(sliding, direct);
    }

    #[test]
    fn deterministic_scorer_gives_perplexity_one() {
        struct Oracle;
        impl Scorer for Oracle {
            fn log_prob(&self, _c: &[TokenId], _t: TokenId) -> f64 {
                0.0
            }
        }
        let ppl = sliding_perplexity(&Oracle, &[5, 6, 7], &Default::default()).unwrap();
        assert!((ppl - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stride_larger_than_max_len_rejected() {
        let scorer = UniformScorer { vocab_size: 2 };
        let cfg = PerplexityConfig { stride: 100, max_len: 50 };
        assert!(sliding_perplexity(&scorer, &[0], &cfg).is_err());
    }

    #[test]
    fn segments_condition_on_previous_stride() {
        // A scorer that records how much context it was shown.
        use std::sync::Mutex;
        struct Probe(Mutex<Vec<usize>>);
        impl Scorer for Probe {
            fn log_prob(&self, c: &[TokenId], _t: TokenId) -> f64 {
                self.0.lock().unwrap().push(c.len());
                -1.0
            }
        }
        let probe = Probe(Mutex::new(Vec::new()));
        let tokens: Vec<TokenId> = vec![0; 10];
        let cfg = PerplexityConfig { stride: 2, max_len: 4 };
        sliding_perplexity(&probe, &tokens, &cfg).unwrap();
        let lens = probe.0.into_inner().unwrap();
        // segment 1: positions 0..4, context from 0 -> lens 0,1,2,3
        // segment 2: positions 4..8, context from 2 -> lens 2,3,4,5
        // segment 3: positions 8..10, context from 6 -> lens 2,3
        assert_eq!(lens, vec![0, 1, 2, 3, 2, 3, 4, 5, 2, 3]);
    }

    #[test]
    fn sweep_single_identity_config() {
        let corpus = abab();
        let lm = train_ngram_lm(&corpus, 2, 0.5).unwrap();
        let scorer = train_ngram_lm(&corpus, 2, 0.5).unwrap();
        let index = crate::index::build_index(&corpus, false).unwrap();
        let outcome = tradeoff_sweep(
            &lm,
            &index,
            &[vec![0]],
            &[DecodingConfig::default()],
            Some(5),
            20,
            &scorer,
            &Default::default(),
            SourceMode::TrainingAndContext,
        )
        .unwrap();
        assert_eq!(outcome.rows.len(), 1);
        // evaluator trained on the same split
        assert_eq!(outcome.warnings.len(), 1);
        assert!(outcome.warnings[0].contains("perplexity proxy contaminated"));
    }

    #[test]
    fn sweep_is_deterministic() {
        let corpus = abab();
        let lm = train_ngram_lm(&corpus, 2, 0.5).unwrap();
        let scorer = train_ngram_lm(&corpus, 2, 0.5).unwrap();
        let index = crate::index::build_index(&corpus, false).unwrap();
        let grid = [
            DecodingConfig { top_k: Some(1), seed: 5, ..Default::default() },
            DecodingConfig { top_p: 0.9, seed: 5, ..Default::default() },
        ];
        let run = || {
            tradeoff_sweep(
                &lm,
                &index,
                &[vec![0], vec![1]],
                &grid,
                Some(5),
                30,
                &scorer,
                &Default::default(),
                SourceMode::TrainingAndContext,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.dup_trunc, y.dup_trunc);
            assert_eq!(x.ppl, y.ppl);
        }
    }
}
