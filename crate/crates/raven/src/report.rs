//! Run configuration, prompt sampling, and report emission.
//!
//! Every analysis writes CSV (or JSON) with a leading comment block that
//! records the toolkit version, a hash of the run configuration, and the
//! index fingerprint, so outputs are traceable and reruns comparable. No
//! timestamps: identical inputs and config produce identical bytes.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::corpus::{
    self, load_generations, DocSep, GenerationRecord, OovTable, TokenCorpus, Vocab,
};
use crate::error::{RavenError, Result};
use crate::index::{build_index, SuffixIndex};
use crate::lab::{train_ngram_lm, tradeoff_sweep, DecodingConfig, PerplexityConfig};
use crate::ngram::{
    find_supercopies, novelty_profile, novelty_profile_record, pointwise_scores, position_profile,
    quote_statistics, unigram_novelty_flags, AnalysisOptions, QuoteConfig, SourceMode,
};
use crate::probes::{cvc_presence_report, generate_cvc_candidates, probe_forms};
use crate::syntax::{
    build_structure_index, syntax_novelty, Granularity, StructureKind, SyntaxOptions,
};
use crate::parse::{parse_file, ParseFormat};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Sample `count` distinct prompt windows from a test corpus: the prompt is
/// the window's first `prompt_len` tokens and the continuation the next
/// `continuation_len`. Windows may overlap, but no two sampled records are
/// identical. Windows are drawn from the concatenated token stream.
pub fn sample_prompts(
    corpus: &TokenCorpus,
    count: usize,
    prompt_len: usize,
    continuation_len: usize,
    seed: u64,
) -> Result<Vec<GenerationRecord>> {
    if continuation_len == 0 {
        return Err(RavenError::InvalidParameter(
            "continuation length must be at least 1".into(),
        ));
    }
    if count == 0 {
        return Err(RavenError::InvalidParameter("count must be at least 1".into()));
    }
    let window = prompt_len + continuation_len;
    let n = corpus.len();
    if n < window {
        return Err(RavenError::CorpusTooShort {
            need: window,
            have: n,
        });
    }
    let num_offsets = n - window + 1;
    if count > num_offsets {
        return Err(RavenError::CannotSampleDistinct);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<&[u32]> = HashSet::with_capacity(count);
    let mut offsets: Vec<usize> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let attempt_budget = 50 * count + 1000;
    while offsets.len() < count && attempts < attempt_budget {
        attempts += 1;
        let off = rng.random_range(0..num_offsets);
        if seen.insert(&corpus.ids[off..off + window]) {
            offsets.push(off);
        }
    }
    if offsets.len() < count {
        // Heavy duplication: fall back to an exhaustive pass over all
        // offsets in a seeded shuffle, keeping the first distinct windows.
        let mut all: Vec<usize> = (0..num_offsets).collect();
        for i in (1..all.len()).rev() {
            let j = rng.random_range(0..=i);
            all.swap(i, j);
        }
        for off in all {
            if offsets.len() == count {
                break;
            }
            if seen.insert(&corpus.ids[off..off + window]) {
                offsets.push(off);
            }
        }
        if offsets.len() < count {
            return Err(RavenError::CannotSampleDistinct);
        }
    }

    Ok(offsets
        .iter()
        .enumerate()
        .map(|(i, &off)| GenerationRecord {
            id: format!("p{i:06}"),
            prompt: corpus.ids[off..off + prompt_len].to_vec(),
            continuation: corpus.ids[off + prompt_len..off + window].to_vec(),
        })
        .collect())
}

/// One analysis invocation. The serialized form feeds the config hash;
/// output destinations and the output format are skipped so the hash tracks
/// exactly the semantically meaningful fields.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "analysis", rename_all = "snake_case")]
pub enum RunConfig {
    Ngram {
        index: PathBuf,
        generations: Vec<PathBuf>,
        mode: String,
        nmin: usize,
        nmax: usize,
        cap: Option<u64>,
        macro_average: bool,
        ngrams_cross_prompt: bool,
        #[serde(skip)]
        scores_out: Option<PathBuf>,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    Supercopy {
        index: PathBuf,
        generations: Vec<PathBuf>,
        threshold: usize,
        with_text: bool,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    Positions {
        index: PathBuf,
        generations: Vec<PathBuf>,
        mode: String,
        bin_width: usize,
        cap: u64,
        ngrams_cross_prompt: bool,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    Quotes {
        index: PathBuf,
        generations: Vec<PathBuf>,
        openers: Vec<String>,
        closers: Vec<String>,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    Syntax {
        kind: String,
        train_parses: PathBuf,
        train_format: String,
        gen_parses: PathBuf,
        gen_format: String,
        granularity: Option<String>,
        lowercase: bool,
        collapse_pos: bool,
        exclude_root: bool,
        exclude_punct: bool,
        core_relations: Vec<String>,
        #[serde(skip)]
        keys_out: Option<PathBuf>,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    LabSweep {
        corpus: PathBuf,
        doc_sep: String,
        order: usize,
        alpha: f64,
        grid: PathBuf,
        prompts: PathBuf,
        eval_corpus: Option<PathBuf>,
        index: Option<PathBuf>,
        continuation_len: usize,
        cap: u64,
        mode: String,
        stride: usize,
        max_len: usize,
        #[serde(skip)]
        plot_script: Option<PathBuf>,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    ProbeForms {
        index: PathBuf,
        forms: PathBuf,
        /// Write to stdout when absent.
        #[serde(skip)]
        out: Option<PathBuf>,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    ProbeCvc {
        index: PathBuf,
        exclude: Option<PathBuf>,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[serde(skip)]
        out: PathBuf,
        #[serde(skip)]
        format: String,
        tag: Option<String>,
    },
}

/// What a run produced, for the CLI to report.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Key/value pairs worth echoing to stdout.
    pub notes: Vec<(String, String)>,
}

pub fn run(config: &RunConfig) -> Result<RunSummary> {
    match config {
        RunConfig::Ngram { .. } => run_ngram(config),
        RunConfig::Supercopy { .. } => run_supercopy(config),
        RunConfig::Positions { .. } => run_positions(config),
        RunConfig::Quotes { .. } => run_quotes(config),
        RunConfig::Syntax { .. } => run_syntax(config),
        RunConfig::LabSweep { .. } => run_lab_sweep(config),
        RunConfig::ProbeForms { .. } => run_probe_forms(config),
        RunConfig::ProbeCvc { .. } => run_probe_cvc(config),
        RunConfig::Compare { .. } => run_compare(config),
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let serialized = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(serialized.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_mode(mode: &str) -> Result<SourceMode> {
    match mode {
        "both" => Ok(SourceMode::TrainingAndContext),
        "train" => Ok(SourceMode::TrainingOnly),
        "context" => Ok(SourceMode::ContextOnly),
        other => Err(RavenError::InvalidParameter(format!(
            "unknown mode {other:?} (expected both, train, or context)"
        ))),
    }
}

pub fn parse_doc_sep(sep: &str) -> Result<DocSep> {
    match sep {
        "line" => Ok(DocSep::Line),
        "blank" => Ok(DocSep::Blank),
        other => Err(RavenError::InvalidParameter(format!(
            "unknown doc separator {other:?} (expected line or blank)"
        ))),
    }
}

pub fn parse_format(format: &str) -> Result<OutputFormat> {
    match format {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(RavenError::InvalidParameter(format!(
            "unknown format {other:?} (expected csv or json)"
        ))),
    }
}

pub fn parse_parse_format(format: &str) -> Result<ParseFormat> {
    match format {
        "conllu" => Ok(ParseFormat::Conllu),
        "brackets" => Ok(ParseFormat::Brackets),
        other => Err(RavenError::InvalidParameter(format!(
            "unknown parse format {other:?} (expected conllu or brackets)"
        ))),
    }
}

/// Infer a parse file's format from its extension.
pub fn infer_parse_format(path: &Path) -> Option<&'static str> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("conllu") | Some("conll") => Some("conllu"),
        Some("mrg") | Some("ptb") | Some("brackets") | Some("trees") => Some("brackets"),
        _ => None,
    }
}

fn require_file(role: &'static str, path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(RavenError::FileNotFound(role, path.display().to_string()));
    }
    Ok(())
}

/// Load index plus its sidecar vocab (`<index>.vocab`).
pub fn load_index_and_vocab(path: &Path) -> Result<(SuffixIndex, Vocab)> {
    require_file("index", path)?;
    let index = SuffixIndex::load(path)?;
    let vocab_path = sidecar_vocab_path(path);
    require_file("vocab", &vocab_path)?;
    let vocab = read_vocab(&vocab_path)?;
    if vocab.len() != index.vocab_size() {
        return Err(RavenError::InvalidParameter(format!(
            "vocab sidecar has {} tokens but index expects {}",
            vocab.len(),
            index.vocab_size()
        )));
    }
    Ok((index, vocab))
}

pub fn sidecar_vocab_path(index_path: &Path) -> PathBuf {
    let mut os = index_path.as_os_str().to_os_string();
    os.push(".vocab");
    PathBuf::from(os)
}

pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut out = String::with_capacity(vocab.len() * 8);
    for token in vocab.tokens() {
        out.push_str(token);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let file = File::open(path)?;
    let tokens: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()?;
    Vocab::from_tokens(tokens)
}

fn load_all_generations(
    paths: &[PathBuf],
    vocab: &Vocab,
) -> Result<(Vec<GenerationRecord>, OovTable)> {
    let mut records = Vec::new();
    let mut oov = OovTable::new(vocab.len());
    for path in paths {
        require_file("generations", path)?;
        let file = File::open(path)?;
        let (mut recs, file_oov) = load_generations(BufReader::new(file), vocab)?;
        // Re-encode OOV ids into the shared table so ids stay consistent
        // across files.
        if !file_oov.is_empty() {
            for rec in &mut recs {
                for id in rec.prompt.iter_mut().chain(rec.continuation.iter_mut()) {
                    if let Some(name) = file_oov.name(*id) {
                        *id = oov.intern(name);
                    }
                }
            }
        }
        records.append(&mut recs);
    }
    if records.is_empty() {
        return Err(RavenError::NoRecords);
    }
    Ok((records, oov))
}

/// Report metadata written as a `#`-comment block (CSV) or a `meta` object
/// (JSON).
#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub config: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub extra: Vec<(String, String)>,
}

impl ReportMeta {
    fn new(config: &RunConfig) -> Self {
        Self {
            tool: "raven".into(),
            version: TOOL_VERSION.into(),
            config: config_hash(config),
            index: None,
            tag: None,
            extra: Vec::new(),
        }
    }

    fn with_extra(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }
}

/// A rectangular report; values stay typed so JSON output keeps numbers.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn value_to_csv(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write_table(
    path: &Path,
    meta: &ReportMeta,
    table: &Table,
    format: OutputFormat,
) -> Result<()> {
    let file = File::create(path)?;
    write_table_to(file, meta, table, format)
}

pub fn write_table_to(
    mut file: impl Write,
    meta: &ReportMeta,
    table: &Table,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut head = String::new();
            head.push_str(&format!("# {} {}\n", meta.tool, meta.version));
            head.push_str(&format!("# config {}\n", meta.config));
            if let Some(index) = &meta.index {
                head.push_str(&format!("# index {index}\n"));
            }
            if let Some(tag) = &meta.tag {
                head.push_str(&format!("# tag {tag}\n"));
            }
            for (k, v) in &meta.extra {
                head.push_str(&format!("# {k} {v}\n"));
            }
            file.write_all(head.as_bytes())?;
            let mut writer = csv::Writer::from_writer(file);
            writer
                .write_record(&table.columns)
                .map_err(csv_error)?;
            for row in &table.rows {
                let rendered: Vec<String> = row.iter().map(value_to_csv).collect();
                writer.write_record(&rendered).map_err(csv_error)?;
            }
            writer.flush()?;
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (col, val) in table.columns.iter().zip(row) {
                        obj.insert(col.clone(), val.clone());
                    }
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({ "meta": meta, "rows": rows });
            serde_json::to_writer_pretty(&mut file, &doc)
                .map_err(|e| RavenError::InvalidParameter(e.to_string()))?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> RavenError {
    RavenError::InvalidParameter(format!("csv: {e}"))
}

fn f64_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn opt_f64_value(x: Option<f64>) -> Value {
    x.map(f64_value).unwrap_or(Value::Null)
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

fn run_ngram(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::Ngram {
        index,
        generations,
        mode,
        nmin,
        nmax,
        cap,
        macro_average,
        ngrams_cross_prompt,
        scores_out,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let source_mode = parse_mode(mode)?;
    let format = parse_format(format)?;
    let opts = AnalysisOptions {
        ngrams_cross_prompt: *ngrams_cross_prompt,
    };
    let (idx, vocab) = load_index_and_vocab(index)?;
    let (records, oov) = load_all_generations(generations, &vocab)?;

    let profile = novelty_profile(&idx, &records, *nmin, *nmax, source_mode, opts)?;
    let macro_fractions: Option<Vec<Option<f64>>> = if *macro_average {
        let per_record: Vec<_> = records
            .iter()
            .map(|r| novelty_profile_record(&idx, r, *nmin, *nmax, source_mode, opts))
            .collect::<Result<_>>()?;
        Some(
            (0..profile.counts.len())
                .map(|i| {
                    let fractions: Vec<f64> = per_record
                        .iter()
                        .filter_map(|p: &crate::ngram::NoveltyProfile| p.counts[i].fraction())
                        .collect();
                    (!fractions.is_empty())
                        .then(|| fractions.iter().sum::<f64>() / fractions.len() as f64)
                })
                .collect(),
        )
    } else {
        None
    };

    let mut columns = vec!["n", "total", "novel", "fraction"];
    if macro_average.to_owned() {
        columns.push("fraction_macro");
    }
    let mut table = Table::new(&columns);
    for (i, count) in profile.counts.iter().enumerate() {
        let mut row = vec![
            json!(count.n),
            json!(count.total),
            json!(count.novel),
            opt_f64_value(count.fraction()),
        ];
        if let Some(macros) = &macro_fractions {
            row.push(opt_f64_value(macros[i]));
        }
        table.push(row);
    }

    let pooled: Vec<u64> = records
        .iter()
        .map(|r| pointwise_scores(&idx, r, source_mode, *cap, opts))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flat_map(|s| s.scores)
        .collect();
    let dup_trunc = crate::ngram::truncated_mean(&pooled, *cap);

    let meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("mode", mode)
    .with_extra("records", records.len())
    .with_extra("oov_types", oov.len())
    .with_extra(
        &cap.map_or("dup_mean".to_string(), |c| format!("dup_trunc{c}")),
        dup_trunc,
    );
    write_table(out, &meta, &table, format)?;

    let mut summary = RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    };

    if let Some(scores_path) = scores_out {
        let mut scores_table = Table::new(&["record", "tokens", "mean", "trunc_mean"]);
        for record in &records {
            let series = pointwise_scores(&idx, record, source_mode, *cap, opts)?;
            scores_table.push(vec![
                json!(record.id),
                json!(series.scores.len()),
                f64_value(series.mean()),
                f64_value(series.truncated_mean),
            ]);
        }
        let meta = ReportMeta {
            index: Some(idx.fingerprint_hex()[..16].to_string()),
            tag: tag.clone(),
            ..ReportMeta::new(config)
        };
        write_table(scores_path, &meta, &scores_table, format)?;
        summary.outputs.push(scores_path.clone());
    }

    summary
        .notes
        .push(("records".into(), records.len().to_string()));
    if !oov.is_empty() {
        summary
            .notes
            .push(("oov_types".into(), oov.len().to_string()));
    }
    Ok(summary)
}

fn run_supercopy(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::Supercopy {
        index,
        generations,
        threshold,
        with_text,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    let (idx, vocab) = load_index_and_vocab(index)?;
    let (records, oov) = load_all_generations(generations, &vocab)?;

    let mut columns = vec![
        "record",
        "start",
        "length",
        "train_occurrences",
        "lead_100gram_occurrences",
    ];
    if *with_text {
        columns.push("text");
    }
    let mut table = Table::new(&columns);
    for record in &records {
        for span in find_supercopies(&idx, record, *threshold)? {
            let mut row = vec![
                json!(record.id),
                json!(span.start),
                json!(span.length),
                json!(span.train_occurrences),
                span.lead_100gram_occurrences
                    .map(|c| json!(c))
                    .unwrap_or(Value::Null),
            ];
            if *with_text {
                let text: Vec<&str> = record.continuation
                    [span.start..span.start + span.length]
                    .iter()
                    .map(|&id| corpus::token_string(id, &vocab, &oov))
                    .collect();
                row.push(json!(text.join(" ")));
            }
            table.push(row);
        }
    }

    let meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("threshold", threshold)
    .with_extra("records", records.len());
    write_table(out, &meta, &table, format)?;
    Ok(RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    })
}

fn run_positions(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::Positions {
        index,
        generations,
        mode,
        bin_width,
        cap,
        ngrams_cross_prompt,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let source_mode = parse_mode(mode)?;
    let format = parse_format(format)?;
    let opts = AnalysisOptions {
        ngrams_cross_prompt: *ngrams_cross_prompt,
    };
    let (idx, vocab) = load_index_and_vocab(index)?;
    let (records, _) = load_all_generations(generations, &vocab)?;

    let profile = position_profile(&idx, &records, source_mode, *bin_width, *cap, opts)?;
    let mut table = Table::new(&["bin_start", "bin_end", "positions", "mean"]);
    for bin in &profile.bins {
        table.push(vec![
            json!(bin.start),
            json!(bin.end),
            json!(bin.positions),
            f64_value(bin.mean),
        ]);
    }
    let meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("mode", mode)
    .with_extra("bin_width", bin_width)
    .with_extra("cap", cap)
    .with_extra("first_bin_discarded", "true");
    write_table(out, &meta, &table, format)?;
    Ok(RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    })
}

fn run_quotes(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::Quotes {
        index,
        generations,
        openers,
        closers,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    let (idx, vocab) = load_index_and_vocab(index)?;
    let (records, oov) = load_all_generations(generations, &vocab)?;

    // Quote tokens may themselves be out of vocabulary; resolve via both.
    let resolve = |tokens: &[String]| -> HashSet<u32> {
        tokens
            .iter()
            .filter_map(|t| vocab.id(t).or_else(|| oov.id(t)))
            .collect()
    };
    let quote_cfg = QuoteConfig {
        openers: resolve(openers),
        closers: resolve(closers),
    };
    let flags: Vec<Vec<bool>> = records
        .iter()
        .map(|r| unigram_novelty_flags(&idx, r))
        .collect::<Result<_>>()?;
    let stats = quote_statistics(&records, &flags, &quote_cfg)?;

    let mut table = Table::new(&[
        "tokens",
        "novel",
        "in_quotes",
        "novel_in_quotes",
        "p_novel",
        "p_quotes",
        "p_novel_given_quotes",
        "p_quotes_given_novel",
        "unmatched_quotes",
    ]);
    table.push(vec![
        json!(stats.tokens),
        json!(stats.novel),
        json!(stats.in_quotes),
        json!(stats.novel_in_quotes),
        opt_f64_value(stats.p_novel()),
        opt_f64_value(stats.p_quotes()),
        opt_f64_value(stats.p_novel_given_quotes()),
        opt_f64_value(stats.p_quotes_given_novel()),
        json!(stats.unmatched_quotes),
    ]);

    let meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    };
    write_table(out, &meta, &table, format)?;
    let mut summary = RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    };
    if stats.unmatched_quotes > 0 {
        summary.warnings.push(format!(
            "{} unmatched quote tokens ignored",
            stats.unmatched_quotes
        ));
    }
    Ok(summary)
}

fn run_syntax(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::Syntax {
        kind,
        train_parses,
        train_format,
        gen_parses,
        gen_format,
        granularity,
        lowercase,
        collapse_pos,
        exclude_root,
        exclude_punct,
        core_relations,
        keys_out,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    let structure_kind = StructureKind::from_name(kind).ok_or_else(|| {
        RavenError::InvalidParameter(format!(
            "unknown structure kind {kind:?} (expected one of {})",
            StructureKind::ALL.map(|k| k.name()).join(", ")
        ))
    })?;
    let granularity = granularity
        .as_deref()
        .map(|g| match g {
            "sentence" => Ok(Granularity::Sentence),
            "instance" => Ok(Granularity::Instance),
            "type" => Ok(Granularity::Type),
            other => Err(RavenError::InvalidParameter(format!(
                "unknown granularity {other:?}"
            ))),
        })
        .transpose()?;
    let opts = SyntaxOptions {
        lowercase: *lowercase,
        collapse_pos: *collapse_pos,
        exclude_root: *exclude_root,
        exclude_punct: *exclude_punct,
        core_relations: core_relations.clone(),
    };

    require_file("train parses", train_parses)?;
    require_file("generated parses", gen_parses)?;
    let train = parse_file(
        BufReader::new(File::open(train_parses)?),
        parse_parse_format(train_format)?,
    )?;
    let generated = parse_file(
        BufReader::new(File::open(gen_parses)?),
        parse_parse_format(gen_format)?,
    )?;

    let index = build_structure_index(&train, structure_kind, &opts)?;
    let report = syntax_novelty(&index, &generated, granularity, &opts)?;

    let mut table = Table::new(&["kind", "granularity", "total", "novel", "fraction"]);
    table.push(vec![
        json!(report.kind.name()),
        json!(match report.granularity {
            Granularity::Sentence => "sentence",
            Granularity::Instance => "instance",
            Granularity::Type => "type",
        }),
        json!(report.total),
        json!(report.novel),
        opt_f64_value(report.fraction()),
    ]);
    let meta = ReportMeta {
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("train_sentences", train.len())
    .with_extra("gen_sentences", generated.len())
    .with_extra("train_keys", index.len());
    write_table(out, &meta, &table, format)?;

    let mut summary = RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    };
    if let Some(keys_path) = keys_out {
        let mut keys_table = Table::new(&["key", "sentences"]);
        for (key, sentences) in &report.novel_keys {
            let ids: Vec<String> = sentences.iter().map(|s| s.to_string()).collect();
            keys_table.push(vec![json!(key), json!(ids.join(" "))]);
        }
        let meta = ReportMeta {
            tag: tag.clone(),
            ..ReportMeta::new(config)
        };
        write_table(keys_path, &meta, &keys_table, format)?;
        summary.outputs.push(keys_path.clone());
    }
    Ok(summary)
}

fn run_lab_sweep(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::LabSweep {
        corpus: corpus_path,
        doc_sep,
        order,
        alpha,
        grid: grid_path,
        prompts: prompts_path,
        eval_corpus,
        index: index_path,
        continuation_len,
        cap,
        mode,
        stride,
        max_len,
        plot_script,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    let source_mode = parse_mode(mode)?;
    let sep = parse_doc_sep(doc_sep)?;

    require_file("corpus", corpus_path)?;
    let (vocab, corpus) = corpus::ingest_corpus(BufReader::new(File::open(corpus_path)?), sep)?;
    let lm = train_ngram_lm(&corpus, *order, *alpha)?;

    let idx = match index_path {
        Some(p) => {
            let (idx, idx_vocab) = load_index_and_vocab(p)?;
            if idx_vocab.tokens() != vocab.tokens() {
                return Err(RavenError::InvalidParameter(
                    "index vocab does not match the corpus".into(),
                ));
            }
            idx
        }
        None => build_index(&corpus, false)?,
    };

    let scorer = match eval_corpus {
        Some(p) => {
            require_file("eval corpus", p)?;
            // Encode the evaluation split against the shared vocabulary,
            // extending it with fresh ids for unseen tokens.
            let file = File::open(p)?;
            let (eval_vocab, eval_own) = corpus::ingest_corpus(BufReader::new(file), sep)?;
            let mut extended = vocab.clone();
            let ids = eval_own
                .ids
                .iter()
                .map(|&id| extended.ensure(eval_vocab.token(id).unwrap()))
                .collect::<Result<Vec<_>>>()?;
            let eval_encoded = TokenCorpus {
                ids,
                doc_starts: eval_own.doc_starts.clone(),
                vocab_size: extended.len(),
            };
            train_ngram_lm(&eval_encoded, *order, *alpha)?
        }
        None => train_ngram_lm(&corpus, *order, *alpha)?,
    };

    require_file("grid", grid_path)?;
    let grid_text = std::fs::read_to_string(grid_path)?;
    let grid: Vec<DecodingConfig> = serde_json::from_str(&grid_text)
        .map_err(|e| RavenError::InvalidParameter(format!("grid: {e}")))?;

    require_file("prompts", prompts_path)?;
    let (prompt_records, _) =
        load_generations(BufReader::new(File::open(prompts_path)?), &vocab)?;
    let prompts: Vec<Vec<u32>> = prompt_records.iter().map(|r| r.prompt.clone()).collect();

    let ppl_cfg = PerplexityConfig {
        stride: *stride,
        max_len: *max_len,
    };
    let outcome = tradeoff_sweep(
        &lm,
        &idx,
        &prompts,
        &grid,
        Some(*cap),
        *continuation_len,
        &scorer,
        &ppl_cfg,
        source_mode,
    )?;

    let dup_col = format!("dup_trunc{cap}");
    let mut table = Table::new(&["top_k", "top_p", "temperature", "seed", &dup_col, "ppl"]);
    for row in &outcome.rows {
        table.push(vec![
            row.config
                .top_k
                .map(|k| json!(k))
                .unwrap_or(json!("inf")),
            f64_value(row.config.top_p),
            f64_value(row.config.temperature),
            json!(row.config.seed),
            f64_value(row.dup_trunc),
            f64_value(row.ppl),
        ]);
    }
    let meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("order", order)
    .with_extra("alpha", alpha)
    .with_extra("prompts", prompts.len())
    .with_extra("continuation_len", continuation_len)
    // Perplexity is a proxy for quality; the assumption is imperfect
    // (repetitive text scores well), so treat trends, not absolutes.
    .with_extra("quality_proxy", "perplexity");
    write_table(out, &meta, &table, format)?;

    let mut summary = RunSummary {
        outputs: vec![out.clone()],
        warnings: outcome.warnings.clone(),
        ..Default::default()
    };
    if let Some(script_path) = plot_script {
        let script = gnuplot_script(out, &dup_col);
        std::fs::write(script_path, script)?;
        summary.outputs.push(script_path.clone());
    }
    Ok(summary)
}

fn gnuplot_script(csv_path: &Path, dup_col: &str) -> String {
    format!(
        "set datafile separator \",\"\n\
         set datafile commentschars \"#\"\n\
         set key autotitle columnhead\n\
         set xlabel \"perplexity\"\n\
         set ylabel \"{dup_col}\"\n\
         plot \"{}\" using 6:5 with points pt 7 title \"decoding configs\"\n",
        csv_path.display()
    )
}

fn run_probe_forms(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::ProbeForms {
        index,
        forms: forms_path,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    let (idx, vocab) = load_index_and_vocab(index)?;
    require_file("forms", forms_path)?;
    let forms: Vec<String> = std::fs::read_to_string(forms_path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    let report = probe_forms(&idx, &vocab, &forms)?;

    let mut table = Table::new(&["form", "present", "count"]);
    for probe in &report {
        table.push(vec![
            json!(probe.form),
            json!(probe.present),
            json!(probe.count),
        ]);
    }
    let meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    };
    match out {
        Some(path) => {
            write_table(path, &meta, &table, format)?;
            Ok(RunSummary {
                outputs: vec![path.clone()],
                ..Default::default()
            })
        }
        None => {
            write_table_to(std::io::stdout().lock(), &meta, &table, format)?;
            Ok(RunSummary::default())
        }
    }
}

fn run_probe_cvc(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::ProbeCvc {
        index,
        exclude,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    let (idx, vocab) = load_index_and_vocab(index)?;
    let exclusions: HashSet<String> = match exclude {
        Some(path) => {
            require_file("exclusion list", path)?;
            std::fs::read_to_string(path)?
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect()
        }
        None => HashSet::new(),
    };
    let pairs = generate_cvc_candidates(&exclusions);
    let rows = cvc_presence_report(&idx, &vocab, &pairs)?;

    let mut table = Table::new(&["singular", "plural", "class", "singular_count", "plural_count"]);
    let mut class_counts = std::collections::BTreeMap::new();
    for row in &rows {
        *class_counts.entry(row.class.name()).or_insert(0u64) += 1;
        table.push(vec![
            json!(row.pair.singular),
            json!(row.pair.plural),
            json!(row.class.name()),
            json!(row.singular_count),
            json!(row.plural_count),
        ]);
    }
    let mut meta = ReportMeta {
        index: Some(idx.fingerprint_hex()[..16].to_string()),
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("candidates", rows.len());
    for (class, count) in &class_counts {
        meta = meta.with_extra(class, count);
    }
    write_table(out, &meta, &table, format)?;

    let mut summary = RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    };
    for (class, count) in class_counts {
        summary.notes.push((class.to_string(), count.to_string()));
    }
    Ok(summary)
}

fn run_compare(config: &RunConfig) -> Result<RunSummary> {
    let RunConfig::Compare {
        a,
        b,
        out,
        format,
        tag,
    } = config
    else {
        unreachable!()
    };
    let format = parse_format(format)?;
    require_file("report", a)?;
    require_file("report", b)?;
    let (cols_a, rows_a) = read_report_csv(a)?;
    let (cols_b, rows_b) = read_report_csv(b)?;
    if cols_a.is_empty() || cols_b.is_empty() {
        return Err(RavenError::InvalidParameter(
            "compare inputs must have a header row".into(),
        ));
    }

    let mut columns: Vec<String> = vec![cols_a[0].clone()];
    columns.extend(cols_a[1..].iter().map(|c| format!("{c}_a")));
    columns.extend(cols_b[1..].iter().map(|c| format!("{c}_b")));
    let column_refs: Vec<&str> = columns.iter().map(|c| c.as_str()).collect();
    let mut table = Table::new(&column_refs);

    let b_by_key: std::collections::HashMap<&str, &Vec<String>> = rows_b
        .iter()
        .map(|row| (row[0].as_str(), row))
        .collect();
    let mut seen_keys: HashSet<&str> = HashSet::new();
    for row in &rows_a {
        seen_keys.insert(row[0].as_str());
        let mut merged: Vec<Value> = vec![json!(row[0])];
        merged.extend(row[1..].iter().map(|v| json!(v)));
        match b_by_key.get(row[0].as_str()) {
            Some(b_row) => merged.extend(b_row[1..].iter().map(|v| json!(v))),
            None => merged.extend(std::iter::repeat(Value::Null).take(cols_b.len() - 1)),
        }
        table.push(merged);
    }
    for row in &rows_b {
        if seen_keys.contains(row[0].as_str()) {
            continue;
        }
        let mut merged: Vec<Value> = vec![json!(row[0])];
        merged.extend(std::iter::repeat(Value::Null).take(cols_a.len() - 1));
        merged.extend(row[1..].iter().map(|v| json!(v)));
        table.push(merged);
    }

    let meta = ReportMeta {
        tag: tag.clone(),
        ..ReportMeta::new(config)
    }
    .with_extra("a", a.display())
    .with_extra("b", b.display());
    write_table(out, &meta, &table, format)?;
    Ok(RunSummary {
        outputs: vec![out.clone()],
        ..Default::default()
    })
}

/// Read one of this tool's CSV reports back: skip `#` comment lines, first
/// remaining row is the header.
pub fn read_report_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let data: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(data.as_bytes());
    let header = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
