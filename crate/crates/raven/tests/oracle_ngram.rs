//! N-gram analyses against definitional brute-force oracles, plus the
//! downward-closure and mode-algebra properties.

mod common;

use common::{
    oracle_is_duplicated, oracle_novelty_counts, oracle_pointwise_score, oracle_supercopies,
    random_instance, seeded, NaiveIndex,
};
use proptest::prelude::*;
use rand::Rng;
use raven::index::build_index;
use raven::ngram::{
    find_supercopies, is_duplicated, novelty_profile, pointwise_scores, AnalysisOptions,
    SourceMode,
};

const MODES: [SourceMode; 3] = [
    SourceMode::TrainingAndContext,
    SourceMode::TrainingOnly,
    SourceMode::ContextOnly,
];

#[test]
fn pointwise_scores_match_oracle_on_random_instances() {
    let mut rng = seeded(41);
    for round in 0..60 {
        let instance = random_instance(&mut rng);
        let index = build_index(&instance.corpus, false).unwrap();
        let naive = NaiveIndex::new(&instance.docs, false);
        for mode in MODES {
            let series = pointwise_scores(
                &index,
                &instance.record,
                mode,
                Some(5),
                AnalysisOptions::default(),
            )
            .unwrap();
            for (t, &score) in series.scores.iter().enumerate() {
                let expected = oracle_pointwise_score(&naive, &instance.record, t, mode);
                assert_eq!(
                    score, expected,
                    "round {round} mode {mode:?} position {t}"
                );
            }
        }
    }
}

#[test]
fn novelty_profile_matches_oracle_on_random_instances() {
    let mut rng = seeded(42);
    for round in 0..40 {
        let instance = random_instance(&mut rng);
        let index = build_index(&instance.corpus, false).unwrap();
        let naive = NaiveIndex::new(&instance.docs, false);
        let records = vec![instance.record.clone()];
        for mode in MODES {
            let profile =
                novelty_profile(&index, &records, 1, 10, mode, AnalysisOptions::default())
                    .unwrap();
            for n in 1..=10 {
                let (total, novel) = oracle_novelty_counts(&naive, &instance.record, n, mode);
                let count = profile.count(n).unwrap();
                assert_eq!(
                    (count.total, count.novel),
                    (total, novel),
                    "round {round} mode {mode:?} n {n}"
                );
            }
        }
    }
}

#[test]
fn supercopies_match_oracle_on_random_instances() {
    let mut rng = seeded(43);
    for round in 0..60 {
        let instance = random_instance(&mut rng);
        let index = build_index(&instance.corpus, false).unwrap();
        let naive = NaiveIndex::new(&instance.docs, false);
        for threshold in [3usize, 5] {
            let spans = find_supercopies(&index, &instance.record, threshold).unwrap();
            let got: Vec<(usize, usize, u64)> = spans
                .iter()
                .map(|s| (s.start, s.length, s.train_occurrences))
                .collect();
            let expected = oracle_supercopies(&naive, &instance.record, threshold);
            assert_eq!(got, expected, "round {round} threshold {threshold}");
            // every reported span verified by contains
            for span in &spans {
                let tokens =
                    &instance.record.continuation[span.start..span.start + span.length];
                assert!(index.contains(tokens).unwrap());
            }
        }
    }
}

#[test]
fn downward_closure_and_mode_algebra() {
    let mut rng = seeded(44);
    let mut checked = 0usize;
    for _ in 0..50 {
        let instance = random_instance(&mut rng);
        let index = build_index(&instance.corpus, false).unwrap();
        let record = &instance.record;
        let c = record.continuation.len();
        // sample positions; check all n up to 10 at each
        for _ in 0..30 {
            let t = rng.random_range(0..c);
            let max_n = (t + 1).min(10);
            let mut dup = [[false; 11]; 3];
            for (m, mode) in MODES.iter().enumerate() {
                for n in 1..=max_n {
                    dup[m][n] = is_duplicated(&index, record, n, t, *mode).unwrap();
                    checked += 1;
                }
            }
            for n in 2..=max_n {
                for m in 0..3 {
                    assert!(
                        !dup[m][n] || dup[m][n - 1],
                        "downward closure violated: mode {m} n {n} t {t}"
                    );
                }
            }
            for n in 1..=max_n {
                assert_eq!(
                    dup[0][n],
                    dup[1][n] || dup[2][n],
                    "mode algebra violated at n {n} t {t}"
                );
            }
        }
    }
    assert!(checked > 10_000, "checked {checked} triples");
}

#[test]
fn is_duplicated_agrees_with_oracle() {
    let mut rng = seeded(45);
    for _ in 0..40 {
        let instance = random_instance(&mut rng);
        let index = build_index(&instance.corpus, false).unwrap();
        let naive = NaiveIndex::new(&instance.docs, false);
        let c = instance.record.continuation.len();
        for _ in 0..25 {
            let t = rng.random_range(0..c);
            let n = rng.random_range(1..=(t + 1).min(12));
            for mode in MODES {
                assert_eq!(
                    is_duplicated(&index, &instance.record, n, t, mode).unwrap(),
                    oracle_is_duplicated(&naive, &instance.record, n, t, mode),
                    "n {n} t {t} mode {mode:?}"
                );
            }
        }
    }
}

#[test]
fn truncation_with_infinite_cap_is_plain_mean() {
    let mut rng = seeded(46);
    for _ in 0..20 {
        let instance = random_instance(&mut rng);
        let index = build_index(&instance.corpus, false).unwrap();
        let series = pointwise_scores(
            &index,
            &instance.record,
            SourceMode::TrainingAndContext,
            None,
            AnalysisOptions::default(),
        )
        .unwrap();
        assert_eq!(series.truncated_mean, series.mean());
        // capped mean never exceeds the uncapped mean
        for cap in [5u64, 10] {
            let capped = pointwise_scores(
                &index,
                &instance.record,
                SourceMode::TrainingAndContext,
                Some(cap),
                AnalysisOptions::default(),
            )
            .unwrap();
            assert!(capped.truncated_mean <= series.truncated_mean + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Score bounds hold for arbitrary small instances: 1 <= score[t] <= t+2.
    #[test]
    fn score_bounds(
        doc in prop::collection::vec(0u32..6, 1..60),
        continuation in prop::collection::vec(0u32..8, 1..60),
        prompt in prop::collection::vec(0u32..8, 0..20),
    ) {
        let corpus = raven::corpus::TokenCorpus {
            ids: doc.clone(),
            doc_starts: vec![0],
            vocab_size: 8,
        };
        let index = build_index(&corpus, false).unwrap();
        let record = raven::corpus::GenerationRecord {
            id: "p".into(),
            prompt,
            continuation,
        };
        for mode in MODES {
            let series = pointwise_scores(&index, &record, mode, Some(5), AnalysisOptions::default()).unwrap();
            for (t, &s) in series.scores.iter().enumerate() {
                prop_assert!(s >= 1 && s <= t as u64 + 2, "score {s} at {t}");
            }
        }
    }

    /// Per-position novelty is monotone non-increasing in duplication as n
    /// grows: fraction(n) is non-decreasing in n for every mode.
    #[test]
    fn novelty_fraction_monotone_in_n(
        doc in prop::collection::vec(0u32..4, 20..120),
        continuation in prop::collection::vec(0u32..4, 12..80),
    ) {
        let corpus = raven::corpus::TokenCorpus {
            ids: doc.clone(),
            doc_starts: vec![0],
            vocab_size: 4,
        };
        let index = build_index(&corpus, false).unwrap();
        let record = raven::corpus::GenerationRecord { id: "p".into(), prompt: vec![], continuation };
        let records = vec![record];
        for mode in MODES {
            let profile = novelty_profile(&index, &records, 1, 8, mode, AnalysisOptions::default()).unwrap();
            let mut prev = -1.0f64;
            for n in 1..=8 {
                if let Some(f) = profile.count(n).unwrap().fraction() {
                    prop_assert!(f >= prev - 1e-12, "fraction dropped at n {n}: {f} < {prev}");
                    prev = f;
                }
            }
        }
    }
}
