//! Sequential novelty metrics: per-n novelty fractions, pointwise duplication
//! scores, supercopy spans, position profiles, and quotation statistics.
//!
//! An n-gram of a continuation is *duplicated* if it appears in the training
//! set or earlier in the context (the prompt plus the already-generated
//! tokens); otherwise it is novel. N-grams are confined to the continuation:
//! the n-gram ending at continuation position t covers positions t-n+1..=t,
//! so n can be at most t+1. A sensitivity option allows n-grams to extend
//! back into the prompt instead.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::automaton::self_matching_stats;
use crate::corpus::{GenerationRecord, TokenId};
use crate::error::{RavenError, Result};
use crate::index::SuffixIndex;

/// Which duplication sources count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    /// Training set or context (the default reading).
    TrainingAndContext,
    /// Training set only.
    TrainingOnly,
    /// Context only: an occurrence within prompt + continuation starting
    /// strictly before the n-gram's own start offset.
    ContextOnly,
}

/// Knobs shared by the n-gram analyses.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisOptions {
    /// Let n-grams extend back into the prompt (sensitivity study; off by
    /// default, matching the position-score semantics of the analyses).
    pub ngrams_cross_prompt: bool,
}

/// Per-record duplication lengths: `out[t]` is the length of the longest
/// duplicated n-gram ending at continuation position `t` under `mode`
/// (0 when even the unigram is novel). This is the engine behind every
/// sequential metric; with the default options `out[t] <= t + 1`.
pub fn duplication_lengths(
    index: &SuffixIndex,
    record: &GenerationRecord,
    mode: SourceMode,
    opts: AnalysisOptions,
) -> Result<Vec<usize>> {
    let p = record.prompt.len();
    let c = record.continuation.len();
    if c == 0 {
        return Ok(Vec::new());
    }

    let train: Option<Vec<usize>> = match mode {
        SourceMode::ContextOnly => None,
        _ if opts.ngrams_cross_prompt => {
            let full: Vec<TokenId> = record
                .prompt
                .iter()
                .chain(record.continuation.iter())
                .copied()
                .collect();
            let ms = index.matching_stats(&full)?;
            Some((0..c).map(|t| ms[p + t]).collect())
        }
        _ => Some(index.matching_stats(&record.continuation)?),
    };

    let context: Option<Vec<usize>> = match mode {
        SourceMode::TrainingOnly => None,
        _ => {
            let full: Vec<TokenId> = record
                .prompt
                .iter()
                .chain(record.continuation.iter())
                .copied()
                .collect();
            let ms = self_matching_stats(&full);
            Some(
                (0..c)
                    .map(|t| {
                        let raw = ms[p + t];
                        if opts.ngrams_cross_prompt {
                            raw
                        } else {
                            raw.min(t + 1)
                        }
                    })
                    .collect(),
            )
        }
    };

    Ok((0..c)
        .map(|t| {
            let a = train.as_ref().map_or(0, |v| v[t]);
            let b = context.as_ref().map_or(0, |v| v[t]);
            a.max(b)
        })
        .collect())
}

/// Is the n-gram of the continuation ending at position `t` duplicated under
/// `mode`? Checked directly against the index and a scan of the context.
pub fn is_duplicated(
    index: &SuffixIndex,
    record: &GenerationRecord,
    n: usize,
    t: usize,
    mode: SourceMode,
) -> Result<bool> {
    if n == 0 {
        return Err(RavenError::InvalidParameter("n must be at least 1".into()));
    }
    if t >= record.continuation.len() {
        return Err(RavenError::InvalidParameter(format!(
            "position {t} out of range for continuation of length {}",
            record.continuation.len()
        )));
    }
    if n > t + 1 {
        return Err(RavenError::NgramExceedsPrefix { n, t });
    }
    let gram = &record.continuation[t + 1 - n..=t];

    let in_training = match mode {
        SourceMode::ContextOnly => false,
        _ => index.contains(gram)?,
    };
    if in_training {
        return Ok(true);
    }

    let in_context = match mode {
        SourceMode::TrainingOnly => false,
        _ => {
            let p = record.prompt.len();
            // Occurrences starting strictly before the gram's own start
            // offset p + t - n + 1 in prompt ++ continuation; such an
            // occurrence ends before p + t, so scanning the strict prefix
            // suffices.
            let full: Vec<TokenId> = record
                .prompt
                .iter()
                .chain(record.continuation.iter())
                .copied()
                .collect();
            full[..p + t].windows(n).any(|w| w == gram)
        }
    };
    Ok(in_context)
}

/// Pooled novelty counts for one n-gram size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoveltyCount {
    pub n: usize,
    pub total: u64,
    pub novel: u64,
}

impl NoveltyCount {
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.novel as f64 / self.total as f64)
    }
}

/// Novelty fractions per n-gram size, pooled over records (micro-average).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoveltyProfile {
    pub n_min: usize,
    pub n_max: usize,
    pub counts: Vec<NoveltyCount>,
}

impl NoveltyProfile {
    pub fn count(&self, n: usize) -> Option<&NoveltyCount> {
        self.counts.get(n.checked_sub(self.n_min)?)
    }
}

/// Novelty counts for a single record, used for macro-averaging.
pub fn novelty_profile_record(
    index: &SuffixIndex,
    record: &GenerationRecord,
    n_min: usize,
    n_max: usize,
    mode: SourceMode,
    opts: AnalysisOptions,
) -> Result<NoveltyProfile> {
    let lengths = duplication_lengths(index, record, mode, opts)?;
    let c = record.continuation.len();
    let counts = (n_min..=n_max)
        .map(|n| {
            let total = (c + 1).saturating_sub(n) as u64;
            let novel = (n - 1..c).filter(|&t| lengths[t] < n).count() as u64;
            NoveltyCount { n, total, novel }
        })
        .collect();
    Ok(NoveltyProfile {
        n_min,
        n_max,
        counts,
    })
}

/// Novelty fractions pooled across all records.
pub fn novelty_profile(
    index: &SuffixIndex,
    records: &[GenerationRecord],
    n_min: usize,
    n_max: usize,
    mode: SourceMode,
    opts: AnalysisOptions,
) -> Result<NoveltyProfile> {
    if records.is_empty() {
        return Err(RavenError::NoRecords);
    }
    if n_min < 1 || n_max < n_min {
        return Err(RavenError::InvalidParameter(format!(
            "invalid n-gram range {n_min}..={n_max}"
        )));
    }
    let per_record: Vec<NoveltyProfile> = records
        .par_iter()
        .map(|r| novelty_profile_record(index, r, n_min, n_max, mode, opts))
        .collect::<Result<_>>()?;
    let mut counts: Vec<NoveltyCount> = (n_min..=n_max)
        .map(|n| NoveltyCount {
            n,
            total: 0,
            novel: 0,
        })
        .collect();
    for profile in &per_record {
        for (acc, one) in counts.iter_mut().zip(&profile.counts) {
            acc.total += one.total;
            acc.novel += one.novel;
        }
    }
    Ok(NoveltyProfile {
        n_min,
        n_max,
        counts,
    })
}

/// Per-token pointwise duplication scores for one record.
///
/// `scores[t]` is the size of the smallest novel n-gram ending at position t,
/// equal to one plus the longest duplicated n-gram length there. When every
/// checkable n-gram ending at t is duplicated the score is t + 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationSeries {
    pub scores: Vec<u64>,
    /// Truncation bound applied for `truncated_mean`; `None` means no cap.
    pub cap: Option<u64>,
    pub truncated_mean: f64,
}

impl DuplicationSeries {
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<u64>() as f64 / self.scores.len() as f64
    }
}

pub fn pointwise_scores(
    index: &SuffixIndex,
    record: &GenerationRecord,
    mode: SourceMode,
    cap: Option<u64>,
    opts: AnalysisOptions,
) -> Result<DuplicationSeries> {
    let lengths = duplication_lengths(index, record, mode, opts)?;
    let scores: Vec<u64> = lengths.iter().map(|&l| l as u64 + 1).collect();
    let truncated_mean = truncated_mean(&scores, cap);
    Ok(DuplicationSeries {
        scores,
        cap,
        truncated_mean,
    })
}

pub(crate) fn truncated_mean(scores: &[u64], cap: Option<u64>) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let sum: u64 = scores
        .iter()
        .map(|&s| cap.map_or(s, |c| s.min(c)))
        .sum();
    sum as f64 / scores.len() as f64
}

/// A maximal span of the continuation that occurs verbatim in training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupercopySpan {
    /// Continuation offset where the span begins.
    pub start: usize,
    /// Token count.
    pub length: usize,
    /// Occurrences of the full span in training.
    pub train_occurrences: u64,
    /// Occurrences of the span's first 100-gram, when the span has one.
    pub lead_100gram_occurrences: Option<u64>,
}

/// All maximal spans of the continuation, of length >= `threshold`, whose
/// token sequence occurs in the training set. Maximal means the span cannot
/// be extended in either direction and remain a training substring; spans may
/// overlap. Duplication from the context does not count: a passage echoing
/// the prompt is repetition, not memorization.
pub fn find_supercopies(
    index: &SuffixIndex,
    record: &GenerationRecord,
    threshold: usize,
) -> Result<Vec<SupercopySpan>> {
    if threshold < 2 {
        return Err(RavenError::InvalidParameter(
            "supercopy threshold must be at least 2".into(),
        ));
    }
    let cont = &record.continuation;
    if cont.is_empty() {
        return Ok(Vec::new());
    }
    let ms = index.matching_stats(cont)?;
    let mut spans = Vec::new();
    for e in 0..cont.len() {
        let len = ms[e];
        if len < threshold {
            continue;
        }
        // Left-maximal by construction (ms is the longest match ending at e);
        // right-maximal iff the match ending at e+1 does not extend this one.
        let right_maximal = e + 1 == cont.len() || ms[e + 1] != len + 1;
        if !right_maximal {
            continue;
        }
        let start = e + 1 - len;
        let span = &cont[start..=e];
        let train_occurrences = index.count_occurrences(span)?;
        let lead_100gram_occurrences = if len >= 100 {
            Some(index.count_occurrences(&span[..100])?)
        } else {
            None
        };
        spans.push(SupercopySpan {
            start,
            length: len,
            train_occurrences,
            lead_100gram_occurrences,
        });
    }
    spans.sort_by_key(|s| (s.start, s.length));
    Ok(spans)
}

/// Mean truncated pointwise scores grouped into position bins.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionProfile {
    pub bin_width: usize,
    pub cap: u64,
    /// First bin (positions 0..bin_width) is discarded: its first positions
    /// have a different range of possible scores than later ones.
    pub first_bin_discarded: bool,
    pub bins: Vec<PositionBin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionBin {
    /// First continuation position covered by the bin.
    pub start: usize,
    /// One past the last position covered.
    pub end: usize,
    /// Number of token positions pooled into the bin across records.
    pub positions: u64,
    pub mean: f64,
}

pub fn position_profile(
    index: &SuffixIndex,
    records: &[GenerationRecord],
    mode: SourceMode,
    bin_width: usize,
    cap: u64,
    opts: AnalysisOptions,
) -> Result<PositionProfile> {
    if records.is_empty() {
        return Err(RavenError::NoRecords);
    }
    if bin_width == 0 || cap == 0 {
        return Err(RavenError::InvalidParameter(
            "bin width and cap must be positive".into(),
        ));
    }
    if records.iter().all(|r| r.continuation.len() < 2 * bin_width) {
        return Err(RavenError::InsufficientLength);
    }

    let per_record: Vec<Vec<u64>> = records
        .par_iter()
        .map(|r| {
            duplication_lengths(index, r, mode, opts)
                .map(|ls| ls.iter().map(|&l| (l as u64 + 1).min(cap)).collect())
        })
        .collect::<Result<_>>()?;

    let max_len = records.iter().map(|r| r.continuation.len()).max().unwrap();
    let num_bins = max_len.div_ceil(bin_width);
    let mut sums = vec![0u64; num_bins];
    let mut counts = vec![0u64; num_bins];
    for scores in &per_record {
        for (t, &s) in scores.iter().enumerate().skip(bin_width) {
            sums[t / bin_width] += s;
            counts[t / bin_width] += 1;
        }
    }
    let bins = (1..num_bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| PositionBin {
            start: b * bin_width,
            end: (b + 1) * bin_width,
            positions: counts[b],
            mean: sums[b] as f64 / counts[b] as f64,
        })
        .collect();
    Ok(PositionProfile {
        bin_width,
        cap,
        first_bin_discarded: true,
        bins,
    })
}

/// A token is novel (for quote statistics) iff its unigram does not occur in
/// the training set.
pub fn unigram_novelty_flags(
    index: &SuffixIndex,
    record: &GenerationRecord,
) -> Result<Vec<bool>> {
    record
        .continuation
        .iter()
        .map(|&tok| Ok(!index.contains(&[tok])?))
        .collect()
}

/// Quote-token id sets; tokens in both sets (straight quotes) pair among
/// themselves by parity.
#[derive(Debug, Clone, Default)]
pub struct QuoteConfig {
    pub openers: HashSet<TokenId>,
    pub closers: HashSet<TokenId>,
}

/// Counts behind the quotation-mark statistics. Quote tokens themselves are
/// excluded from every denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuoteStats {
    /// Non-quote continuation tokens.
    pub tokens: u64,
    /// ... that are novel unigrams.
    pub novel: u64,
    /// ... that lie strictly inside a matched quote pair.
    pub in_quotes: u64,
    /// ... that are both.
    pub novel_in_quotes: u64,
    /// Unmatched quote tokens encountered (reported as a warning).
    pub unmatched_quotes: u64,
}

impl QuoteStats {
    pub fn p_novel(&self) -> Option<f64> {
        ratio(self.novel, self.tokens)
    }

    pub fn p_quotes(&self) -> Option<f64> {
        ratio(self.in_quotes, self.tokens)
    }

    pub fn p_novel_given_quotes(&self) -> Option<f64> {
        ratio(self.novel_in_quotes, self.in_quotes)
    }

    pub fn p_quotes_given_novel(&self) -> Option<f64> {
        ratio(self.novel_in_quotes, self.novel)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Quotation-mark statistics over all records' continuations. `flags[r][t]`
/// is the unigram novelty of record r's continuation token t (see
/// [`unigram_novelty_flags`]).
pub fn quote_statistics(
    records: &[GenerationRecord],
    flags: &[Vec<bool>],
    cfg: &QuoteConfig,
) -> Result<QuoteStats> {
    if records.len() != flags.len() {
        return Err(RavenError::InvalidParameter(
            "one novelty flag vector per record required".into(),
        ));
    }
    let mut stats = QuoteStats::default();
    for (record, record_flags) in records.iter().zip(flags) {
        let cont = &record.continuation;
        if record_flags.len() != cont.len() {
            return Err(RavenError::InvalidParameter(
                "novelty flags must align with continuation tokens".into(),
            ));
        }
        let (in_quotes, unmatched) = mark_quoted_positions(cont, cfg);
        stats.unmatched_quotes += unmatched;
        for (t, &tok) in cont.iter().enumerate() {
            if cfg.openers.contains(&tok) || cfg.closers.contains(&tok) {
                continue;
            }
            stats.tokens += 1;
            let novel = record_flags[t];
            let quoted = in_quotes[t];
            if novel {
                stats.novel += 1;
            }
            if quoted {
                stats.in_quotes += 1;
            }
            if novel && quoted {
                stats.novel_in_quotes += 1;
            }
        }
    }
    Ok(stats)
}

/// Pair quote tokens within one record and mark the positions strictly
/// between each matched pair. Ambiguous tokens (in both sets) pair 1st with
/// 2nd, 3rd with 4th, per distinct token; pure closers match the nearest
/// unclosed pure opener; unmatched quote tokens are counted and ignored.
fn mark_quoted_positions(cont: &[TokenId], cfg: &QuoteConfig) -> (Vec<bool>, u64) {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut unmatched = 0u64;

    let mut opener_stack: Vec<usize> = Vec::new();
    let mut pending_ambiguous: Vec<(TokenId, usize)> = Vec::new();

    for (t, &tok) in cont.iter().enumerate() {
        let is_open = cfg.openers.contains(&tok);
        let is_close = cfg.closers.contains(&tok);
        match (is_open, is_close) {
            (true, true) => {
                if let Some(pos) = pending_ambiguous
                    .iter()
                    .rposition(|&(other, _)| other == tok)
                {
                    let (_, start) = pending_ambiguous.remove(pos);
                    pairs.push((start, t));
                } else {
                    pending_ambiguous.push((tok, t));
                }
            }
            (true, false) => opener_stack.push(t),
            (false, true) => {
                if let Some(start) = opener_stack.pop() {
                    pairs.push((start, t));
                } else {
                    unmatched += 1;
                }
            }
            (false, false) => {}
        }
    }
    unmatched += opener_stack.len() as u64 + pending_ambiguous.len() as u64;

    let mut in_quotes = vec![false; cont.len()];
    for (a, b) in pairs {
        for flag in &mut in_quotes[a + 1..b] {
            *flag = true;
        }
    }
    (in_quotes, unmatched)
}
