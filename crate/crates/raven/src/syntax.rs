//! Syntactic novelty: canonical encodings for seven structure kinds, a
//! training-set membership index, and novelty fractions over generated
//! parses.
//!
//! Encodings are injective per kind: distinct structures produce distinct
//! payload strings. Fields inside a payload are tab-separated; neither
//! CoNLL-U forms nor bracketed-tree tokens can contain a tab.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::error::{RavenError, Result};
use crate::parse::{ConstTree, SentenceParse};

/// Sentinel head form for the virtual ROOT in dependency-arc payloads.
pub const ROOT_FORM: &str = "\u{27E8}ROOT\u{27E9}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    /// Sequence of part-of-speech tags of the sentence.
    PosSequence,
    /// Constituency tree minus the leaves; preterminal labels retained.
    ParseStructure,
    /// (relation, head form, dependent form) per dependency arc.
    DepArc,
    /// (form, relation, side) per arc endpoint.
    DepRole,
    /// Internal CFG productions with no terminal on the right-hand side.
    CfgRule,
    /// (form, tag) per word.
    WordPos,
    /// (verb form, sorted core-argument relations) per verb token.
    ArgStructure,
}

impl StructureKind {
    pub const ALL: [StructureKind; 7] = [
        StructureKind::PosSequence,
        StructureKind::ParseStructure,
        StructureKind::DepArc,
        StructureKind::DepRole,
        StructureKind::CfgRule,
        StructureKind::WordPos,
        StructureKind::ArgStructure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StructureKind::PosSequence => "posseq",
            StructureKind::ParseStructure => "parsestruct",
            StructureKind::DepArc => "deparc",
            StructureKind::DepRole => "deprole",
            StructureKind::CfgRule => "cfgrule",
            StructureKind::WordPos => "wordpos",
            StructureKind::ArgStructure => "argstruct",
        }
    }

    pub fn from_name(name: &str) -> Option<StructureKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Does the kind read the constituency half (versus the dependency half)?
    pub fn needs_constituency(&self) -> bool {
        matches!(
            self,
            StructureKind::PosSequence
                | StructureKind::ParseStructure
                | StructureKind::CfgRule
                | StructureKind::WordPos
        )
    }

    /// Kinds with exactly one key per sentence are scored per sentence.
    pub fn sentence_level(&self) -> bool {
        matches!(
            self,
            StructureKind::PosSequence | StructureKind::ParseStructure
        )
    }
}

/// Extraction knobs. The same options must be used for the training index
/// and the generated text it scores.
#[derive(Debug, Clone)]
pub struct SyntaxOptions {
    /// Lowercase surface forms before encoding.
    pub lowercase: bool,
    /// Collapse noun tags to NOUN and verb tags to VERB in WordPos keys.
    pub collapse_pos: bool,
    /// Drop the virtual-ROOT arc from DepArc/DepRole.
    pub exclude_root: bool,
    /// Drop `punct` arcs from DepArc/DepRole.
    pub exclude_punct: bool,
    /// Relations that count as verb arguments for ArgStructure.
    pub core_relations: Vec<String>,
}

impl Default for SyntaxOptions {
    fn default() -> Self {
        Self {
            lowercase: false,
            collapse_pos: false,
            exclude_root: false,
            exclude_punct: false,
            core_relations: ["nsubj", "nsubj:pass", "obj", "iobj"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl SyntaxOptions {
    fn form(&self, word: &str) -> String {
        if self.lowercase {
            word.to_lowercase()
        } else {
            word.to_string()
        }
    }

    fn tag(&self, tag: &str) -> String {
        if self.collapse_pos {
            collapse_tag(tag)
        } else {
            tag.to_string()
        }
    }
}

fn collapse_tag(tag: &str) -> String {
    match tag {
        "NN" | "NNS" | "NNP" | "NNPS" | "NOUN" | "PROPN" => "NOUN".into(),
        "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" | "VERB" => "VERB".into(),
        _ => tag.to_string(),
    }
}

/// Multiset of canonical keys of `kind` in one sentence.
pub fn extract_structures(
    parse: &SentenceParse,
    kind: StructureKind,
    opts: &SyntaxOptions,
) -> Result<Vec<String>> {
    if kind.needs_constituency() {
        let tree = parse.tree.as_ref().ok_or(RavenError::KindMismatch {
            kind: kind.name(),
            needs: "constituency",
        })?;
        Ok(match kind {
            StructureKind::PosSequence => {
                let tags: Vec<String> = tree
                    .tagged_words()
                    .iter()
                    .map(|(_, t)| t.to_string())
                    .collect();
                vec![tags.join(" ")]
            }
            StructureKind::ParseStructure => vec![render_skeleton(tree)],
            StructureKind::CfgRule => {
                let mut rules = Vec::new();
                collect_cfg_rules(tree, &mut rules);
                rules
            }
            StructureKind::WordPos => tree
                .tagged_words()
                .iter()
                .map(|(w, t)| format!("{}\t{}", opts.form(w), opts.tag(t)))
                .collect(),
            _ => unreachable!(),
        })
    } else {
        let deps = parse.deps.as_ref().ok_or(RavenError::KindMismatch {
            kind: kind.name(),
            needs: "dependency",
        })?;
        let form_of = |idx: usize| -> String {
            if idx == 0 {
                ROOT_FORM.to_string()
            } else {
                opts.form(&parse.words[idx - 1])
            }
        };
        let keep_arc = |row: &crate::parse::DepRow| -> bool {
            if opts.exclude_root && row.head == 0 {
                return false;
            }
            if opts.exclude_punct && row.rel == "punct" {
                return false;
            }
            true
        };
        Ok(match kind {
            StructureKind::DepArc => deps
                .iter()
                .enumerate()
                .filter(|(_, row)| keep_arc(row))
                .map(|(i, row)| {
                    format!("{}\t{}\t{}", row.rel, form_of(row.head), form_of(i + 1))
                })
                .collect(),
            StructureKind::DepRole => deps
                .iter()
                .enumerate()
                .filter(|(_, row)| keep_arc(row))
                .flat_map(|(i, row)| {
                    [
                        format!("{}\t{}\thead", form_of(row.head), row.rel),
                        format!("{}\t{}\tdependent", form_of(i + 1), row.rel),
                    ]
                })
                .collect(),
            StructureKind::ArgStructure => {
                let mut keys = Vec::new();
                for (i, word) in parse.words.iter().enumerate() {
                    let is_verb = parse.xpos[i]
                        .as_deref()
                        .is_some_and(|t| t.starts_with("VB"))
                        || parse.upos[i].as_deref() == Some("VERB");
                    if !is_verb {
                        continue;
                    }
                    let mut args: Vec<&str> = deps
                        .iter()
                        .filter(|row| row.head == i + 1)
                        .map(|row| row.rel.as_str())
                        .filter(|rel| opts.core_relations.iter().any(|c| c == rel))
                        .collect();
                    args.sort_unstable();
                    keys.push(format!("{}\t{}", opts.form(word), args.join(",")));
                }
                keys
            }
            _ => unreachable!(),
        })
    }
}

/// Tree with every leaf word removed, preterminal labels retained.
fn render_skeleton(tree: &ConstTree) -> String {
    fn go(tree: &ConstTree, out: &mut String) {
        if let ConstTree::Node { label, children } = tree {
            out.push('(');
            out.push_str(label);
            for child in children {
                if matches!(child, ConstTree::Node { .. }) {
                    out.push(' ');
                    go(child, out);
                }
            }
            out.push(')');
        }
    }
    let mut out = String::new();
    go(tree, &mut out);
    out
}

/// Internal productions whose right-hand side contains no terminal;
/// preterminal -> word rules are excluded.
fn collect_cfg_rules(tree: &ConstTree, out: &mut Vec<String>) {
    if let ConstTree::Node { label, children } = tree {
        let mut all_nodes = true;
        let mut rhs: Vec<&str> = Vec::with_capacity(children.len());
        for child in children {
            match child {
                ConstTree::Node { label, .. } => rhs.push(label),
                ConstTree::Leaf { .. } => all_nodes = false,
            }
        }
        if all_nodes && !children.is_empty() {
            out.push(format!("{} -> {}", label, rhs.join(" ")));
        }
        for child in children {
            collect_cfg_rules(child, out);
        }
    }
}

/// Set of canonical keys of one kind harvested from training parses.
#[derive(Debug, Clone)]
pub struct StructureIndex {
    pub kind: StructureKind,
    keys: HashSet<String>,
}

impl StructureIndex {
    pub fn contains(&self, key: &str) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

pub fn build_structure_index(
    parses: &[SentenceParse],
    kind: StructureKind,
    opts: &SyntaxOptions,
) -> Result<StructureIndex> {
    if parses.is_empty() {
        return Err(RavenError::NoRecords);
    }
    let per_sentence: Vec<Vec<String>> = parses
        .par_iter()
        .map(|p| extract_structures(p, kind, opts))
        .collect::<Result<_>>()?;
    let mut keys = HashSet::new();
    for sentence_keys in per_sentence {
        keys.extend(sentence_keys);
    }
    Ok(StructureIndex { kind, keys })
}

/// How novelty instances are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    /// Fraction of sentences whose single key is novel (PosSequence and
    /// ParseStructure only).
    Sentence,
    /// Fraction of extracted key instances that are novel (duplicates
    /// counted).
    Instance,
    /// Fraction of distinct keys that are novel.
    Type,
}

#[derive(Debug, Clone)]
pub struct SyntaxReport {
    pub kind: StructureKind,
    pub granularity: Granularity,
    pub total: u64,
    pub novel: u64,
    /// Novel keys with the 1-based indices of sentences containing them.
    pub novel_keys: Vec<(String, Vec<usize>)>,
}

impl SyntaxReport {
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.novel as f64 / self.total as f64)
    }
}

/// Novelty of generated parses against a training [`StructureIndex`].
/// `granularity` of `None` picks the kind's default (sentence for the
/// whole-sentence kinds, instance otherwise).
pub fn syntax_novelty(
    index: &StructureIndex,
    parses: &[SentenceParse],
    granularity: Option<Granularity>,
    opts: &SyntaxOptions,
) -> Result<SyntaxReport> {
    if parses.is_empty() {
        return Err(RavenError::NoRecords);
    }
    let kind = index.kind;
    let granularity = match granularity {
        None => {
            if kind.sentence_level() {
                Granularity::Sentence
            } else {
                Granularity::Instance
            }
        }
        Some(Granularity::Sentence) if !kind.sentence_level() => {
            return Err(RavenError::InvalidParameter(format!(
                "sentence granularity requires a single-key kind, not {}",
                kind.name()
            )));
        }
        Some(g) => g,
    };

    let per_sentence: Vec<Vec<String>> = parses
        .par_iter()
        .map(|p| extract_structures(p, kind, opts))
        .collect::<Result<_>>()?;

    let mut novel_keys: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut total = 0u64;
    let mut novel = 0u64;

    match granularity {
        Granularity::Sentence | Granularity::Instance => {
            for (i, keys) in per_sentence.iter().enumerate() {
                total += keys.len() as u64;
                for key in keys {
                    if !index.contains(key) {
                        novel += 1;
                        let ids = novel_keys.entry(key.clone()).or_default();
                        if ids.last() != Some(&(i + 1)) {
                            ids.push(i + 1);
                        }
                    }
                }
            }
        }
        Granularity::Type => {
            let mut seen: HashSet<&str> = HashSet::new();
            for (i, keys) in per_sentence.iter().enumerate() {
                for key in keys {
                    if seen.insert(key) {
                        total += 1;
                        if !index.contains(key) {
                            novel += 1;
                        }
                    }
                    if !index.contains(key) {
                        let ids = novel_keys.entry(key.clone()).or_default();
                        if ids.last() != Some(&(i + 1)) {
                            ids.push(i + 1);
                        }
                    }
                }
            }
        }
    }

    Ok(SyntaxReport {
        kind,
        granularity,
        total,
        novel,
        novel_keys: novel_keys.into_iter().collect(),
    })
}
