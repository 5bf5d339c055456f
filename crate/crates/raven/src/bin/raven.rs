//! Command-line interface for the corpus-novelty toolkit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use raven::corpus::{ingest_corpus, record_to_strings, OovTable};
use raven::error::RavenError;
use raven::index::build_index;
use raven::report::{
    self, infer_parse_format, parse_doc_sep, run, sample_prompts, sidecar_vocab_path, write_vocab,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "raven",
    version,
    about = "Measure how much generated text duplicates a training corpus",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for record-parallel analyses (default: all cores).
    /// The RAVEN_JOBS environment variable overrides this flag.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect the training-corpus index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Sample prompt/continuation windows from a test corpus.
    #[command(subcommand)]
    Prompts(PromptsCommand),
    /// N-gram novelty fractions and pointwise duplication scores.
    Ngram(NgramArgs),
    /// Maximal training-set spans duplicated by continuations.
    Supercopy(SupercopyArgs),
    /// Mean truncated duplication score by position bin.
    Positions(PositionsArgs),
    /// Association between novel unigrams and quotation marks.
    Quotes(QuotesArgs),
    /// Syntactic-structure novelty against training parses.
    Syntax(SyntaxArgs),
    /// Decode-lab experiments with a toy n-gram LM.
    #[command(subcommand)]
    Lab(LabCommand),
    /// Training-set presence probes for word forms.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Join two reports side by side on their first column.
    Compare(CompareArgs),
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Build a suffix-array index (plus a `<out>.vocab` sidecar).
    Build(IndexBuildArgs),
}

#[derive(Args)]
struct IndexBuildArgs {
    /// Training corpus: UTF-8 text, tokens whitespace-separated.
    #[arg(long)]
    corpus: PathBuf,
    /// Output index path.
    #[arg(long)]
    out: PathBuf,
    /// Document separator in the corpus file.
    #[arg(long, default_value = "line", value_parser = ["line", "blank"])]
    doc_sep: String,
    /// Let queries match across document boundaries.
    #[arg(long)]
    allow_cross_doc: bool,
}

#[derive(Subcommand)]
enum PromptsCommand {
    /// Sample distinct windows; prompt = first tokens, continuation = rest.
    Sample(PromptsSampleArgs),
}

#[derive(Args)]
struct PromptsSampleArgs {
    /// Test corpus to sample from.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "line", value_parser = ["line", "blank"])]
    doc_sep: String,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 512)]
    prompt_len: usize,
    #[arg(long, default_value_t = 1000)]
    continuation_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSONL path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CommonReportArgs {
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Free-form label recorded in the report header (e.g. a prompt-length
    /// condition).
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Args)]
struct NgramArgs {
    #[arg(long)]
    index: PathBuf,
    /// Generations JSONL; repeatable.
    #[arg(long, required = true)]
    generations: Vec<PathBuf>,
    /// Duplication sources: training and/or context.
    #[arg(long, default_value = "both", value_parser = ["both", "train", "context"])]
    mode: String,
    #[arg(long, default_value_t = 1)]
    nmin: usize,
    #[arg(long, default_value_t = 10)]
    nmax: usize,
    /// Truncation cap for pointwise scores; 0 disables truncation.
    #[arg(long, default_value_t = 5)]
    cap: u64,
    /// Also report per-record macro-averaged fractions.
    #[arg(long = "macro")]
    macro_average: bool,
    /// Let n-grams extend back into the prompt (sensitivity study).
    #[arg(long)]
    ngrams_cross_prompt: bool,
    /// Also write per-record pointwise score summaries here.
    #[arg(long)]
    scores_out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Args)]
struct SupercopyArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, required = true)]
    generations: Vec<PathBuf>,
    /// Minimum span length to report.
    #[arg(long, default_value_t = 100)]
    threshold: usize,
    /// Include the span text in the report.
    #[arg(long)]
    with_text: bool,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Args)]
struct PositionsArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, required = true)]
    generations: Vec<PathBuf>,
    /// Position analyses default to training-only duplication.
    #[arg(long, default_value = "train", value_parser = ["both", "train", "context"])]
    mode: String,
    #[arg(long = "bin", default_value_t = 100)]
    bin_width: usize,
    #[arg(long, default_value_t = 10)]
    cap: u64,
    #[arg(long)]
    ngrams_cross_prompt: bool,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Args)]
struct QuotesArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, required = true)]
    generations: Vec<PathBuf>,
    /// Opening quote tokens.
    #[arg(long, num_args = 1.., default_values = ["``", "\""])]
    openers: Vec<String>,
    /// Closing quote tokens.
    #[arg(long, num_args = 1.., default_values = ["''", "\""])]
    closers: Vec<String>,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Args)]
struct SyntaxArgs {
    /// Structure kind: posseq, parsestruct, deparc, deprole, cfgrule,
    /// wordpos, or argstruct.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    train_parses: PathBuf,
    /// Parse format; inferred from the extension when omitted.
    #[arg(long, value_parser = ["conllu", "brackets"])]
    train_format: Option<String>,
    #[arg(long)]
    gen_parses: PathBuf,
    #[arg(long, value_parser = ["conllu", "brackets"])]
    gen_format: Option<String>,
    /// sentence, instance, or type; defaults to the kind's natural level.
    #[arg(long, value_parser = ["sentence", "instance", "type"])]
    granularity: Option<String>,
    /// Lowercase surface forms before matching.
    #[arg(long)]
    lowercase: bool,
    /// Collapse noun/verb tag families in wordpos keys.
    #[arg(long)]
    collapse_pos: bool,
    /// Drop the virtual-ROOT arc.
    #[arg(long)]
    exclude_root: bool,
    /// Drop punct arcs.
    #[arg(long)]
    exclude_punct: bool,
    /// Comma-separated relations counting as verb arguments.
    #[arg(long, value_delimiter = ',', default_values = ["nsubj", "nsubj:pass", "obj", "iobj"])]
    core_relations: Vec<String>,
    /// Also write the novel keys (with sentence ids) here.
    #[arg(long)]
    keys_out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Subcommand)]
enum LabCommand {
    /// Sample continuations per decoding config and tabulate the
    /// duplication/perplexity tradeoff.
    Sweep(LabSweepArgs),
}

#[derive(Args)]
struct LabSweepArgs {
    /// Training corpus for the generator LM (and the index, unless given).
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "line", value_parser = ["line", "blank"])]
    doc_sep: String,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// JSON list of {top_k, top_p, temperature, seed} objects.
    #[arg(long)]
    grid: PathBuf,
    /// Prompts JSONL (the prompt field is used).
    #[arg(long)]
    prompts: PathBuf,
    /// Held-out corpus for the perplexity scorer LM; without it the scorer
    /// is trained on the generator's split and a contamination warning is
    /// emitted.
    #[arg(long)]
    eval_corpus: Option<PathBuf>,
    /// Prebuilt index over the corpus (skips the in-memory build).
    #[arg(long)]
    index: Option<PathBuf>,
    /// Tokens to sample per prompt.
    #[arg(long = "length", default_value_t = 100)]
    continuation_len: usize,
    #[arg(long, default_value_t = 5)]
    cap: u64,
    #[arg(long, default_value = "both", value_parser = ["both", "train", "context"])]
    mode: String,
    #[arg(long, default_value_t = 512)]
    stride: usize,
    #[arg(long, default_value_t = 1024)]
    max_len: usize,
    /// Emit a gnuplot script plotting the tradeoff.
    #[arg(long)]
    plot_script: Option<PathBuf>,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Presence and counts for a list of word forms (one per line).
    Forms(ProbeFormsArgs),
    /// Presence classes for nonce consonant-vowel-consonant pairs.
    Cvc(ProbeCvcArgs),
}

#[derive(Args)]
struct ProbeFormsArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    forms: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Args)]
struct ProbeCvcArgs {
    #[arg(long)]
    index: PathBuf,
    /// Word list (one per line) of real words to exclude.
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[command(flatten)]
    common: CommonReportArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// First report CSV.
    #[arg(long)]
    a: PathBuf,
    /// Second report CSV.
    #[arg(long)]
    b: PathBuf,
    #[command(flatten)]
    common: CommonReportArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = std::env::var("RAVEN_JOBS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.jobs);
    if let Some(jobs) = jobs {
        if jobs > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global();
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                RavenError::FileNotFound(..) => ExitCode::from(2),
                RavenError::Io(ref io) if io.kind() == std::io::ErrorKind::NotFound => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(command: Command) -> raven::Result<()> {
    match command {
        Command::Index(IndexCommand::Build(args)) => index_build(args),
        Command::Prompts(PromptsCommand::Sample(args)) => prompts_sample(args),
        Command::Ngram(args) => {
            let config = RunConfig::Ngram {
                index: args.index,
                generations: args.generations,
                mode: args.mode,
                nmin: args.nmin,
                nmax: args.nmax,
                cap: (args.cap > 0).then_some(args.cap),
                macro_average: args.macro_average,
                ngrams_cross_prompt: args.ngrams_cross_prompt,
                scores_out: args.scores_out,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Supercopy(args) => {
            let config = RunConfig::Supercopy {
                index: args.index,
                generations: args.generations,
                threshold: args.threshold,
                with_text: args.with_text,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Positions(args) => {
            let config = RunConfig::Positions {
                index: args.index,
                generations: args.generations,
                mode: args.mode,
                bin_width: args.bin_width,
                cap: args.cap,
                ngrams_cross_prompt: args.ngrams_cross_prompt,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Quotes(args) => {
            let config = RunConfig::Quotes {
                index: args.index,
                generations: args.generations,
                openers: args.openers,
                closers: args.closers,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Syntax(args) => {
            let train_format = resolve_parse_format(args.train_format, &args.train_parses)?;
            let gen_format = resolve_parse_format(args.gen_format, &args.gen_parses)?;
            let config = RunConfig::Syntax {
                kind: args.kind,
                train_parses: args.train_parses,
                train_format,
                gen_parses: args.gen_parses,
                gen_format,
                granularity: args.granularity,
                lowercase: args.lowercase,
                collapse_pos: args.collapse_pos,
                exclude_root: args.exclude_root,
                exclude_punct: args.exclude_punct,
                core_relations: args.core_relations,
                keys_out: args.keys_out,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Lab(LabCommand::Sweep(args)) => {
            let config = RunConfig::LabSweep {
                corpus: args.corpus,
                doc_sep: args.doc_sep,
                order: args.order,
                alpha: args.alpha,
                grid: args.grid,
                prompts: args.prompts,
                eval_corpus: args.eval_corpus,
                index: args.index,
                continuation_len: args.continuation_len,
                cap: args.cap,
                mode: args.mode,
                stride: args.stride,
                max_len: args.max_len,
                plot_script: args.plot_script,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Probe(ProbeCommand::Forms(args)) => {
            let config = RunConfig::ProbeForms {
                index: args.index,
                forms: args.forms,
                out: args.out,
                format: args.format,
                tag: args.tag,
            };
            finish(run(&config)?)
        }
        Command::Probe(ProbeCommand::Cvc(args)) => {
            let config = RunConfig::ProbeCvc {
                index: args.index,
                exclude: args.exclude,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
        Command::Compare(args) => {
            let config = RunConfig::Compare {
                a: args.a,
                b: args.b,
                out: args.common.out,
                format: args.common.format,
                tag: args.common.tag,
            };
            finish(run(&config)?)
        }
    }
}

fn resolve_parse_format(explicit: Option<String>, path: &PathBuf) -> raven::Result<String> {
    match explicit {
        Some(f) => Ok(f),
        None => infer_parse_format(path).map(str::to_string).ok_or_else(|| {
            RavenError::InvalidParameter(format!(
                "cannot infer parse format for {}; pass --train-format/--gen-format",
                path.display()
            ))
        }),
    }
}

fn finish(summary: report::RunSummary) -> raven::Result<()> {
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    for (key, value) in &summary.notes {
        println!("{key}: {value}");
    }
    for path in &summary.outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn index_build(args: IndexBuildArgs) -> raven::Result<()> {
    if !args.corpus.is_file() {
        return Err(RavenError::FileNotFound(
            "corpus",
            args.corpus.display().to_string(),
        ));
    }
    let sep = parse_doc_sep(&args.doc_sep)?;
    let file = File::open(&args.corpus)?;
    let (vocab, corpus) = ingest_corpus(BufReader::new(file), sep)?;
    let index = build_index(&corpus, args.allow_cross_doc)?;
    index.save(&args.out)?;
    write_vocab(&sidecar_vocab_path(&args.out), &vocab)?;
    println!(
        "indexed {} tokens in {} documents (vocab {}, fingerprint {})",
        corpus.len(),
        corpus.num_docs(),
        vocab.len(),
        &index.fingerprint_hex()[..16]
    );
    println!("wrote {}", args.out.display());
    println!("wrote {}", sidecar_vocab_path(&args.out).display());
    Ok(())
}

fn prompts_sample(args: PromptsSampleArgs) -> raven::Result<()> {
    if !args.corpus.is_file() {
        return Err(RavenError::FileNotFound(
            "corpus",
            args.corpus.display().to_string(),
        ));
    }
    let sep = parse_doc_sep(&args.doc_sep)?;
    let file = File::open(&args.corpus)?;
    let (vocab, corpus) = ingest_corpus(BufReader::new(file), sep)?;
    let records = sample_prompts(
        &corpus,
        args.count,
        args.prompt_len,
        args.continuation_len,
        args.seed,
    )?;
    let oov = OovTable::new(vocab.len());
    let out = File::create(&args.out)?;
    let mut writer = BufWriter::new(out);
    for record in &records {
        let (prompt, continuation) = record_to_strings(record, &vocab, &oov);
        let line = serde_json::json!({
            "id": record.id,
            "prompt": prompt,
            "continuation": continuation,
        });
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    println!("sampled {} records", records.len());
    println!("wrote {}", args.out.display());
    Ok(())
}
