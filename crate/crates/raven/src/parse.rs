//! Readers for dependency (CoNLL-U) and constituency (bracketed) parses.
//!
//! A parse may carry only one of the two representations; structure
//! extractors reject kinds that need the missing half.

use std::io::BufRead;

use crate::error::{RavenError, Result};

/// One dependency row: head index (0 is the virtual ROOT, otherwise the
/// 1-based index of the head word) and the relation label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepRow {
    pub head: usize,
    pub rel: String,
}

/// Labeled ordered tree whose leaves are words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstTree {
    Node { label: String, children: Vec<ConstTree> },
    Leaf { word: String },
}

impl ConstTree {
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ConstTree::Leaf { word } => out.push(word),
            ConstTree::Node { children, .. } => {
                for child in children {
                    child.collect_leaves(out);
                }
            }
        }
    }

    /// (word, preterminal label) per leaf, left to right.
    pub fn tagged_words(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_tagged("", &mut out);
        out
    }

    fn collect_tagged<'a>(&'a self, parent: &'a str, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            ConstTree::Leaf { word } => out.push((word, parent)),
            ConstTree::Node { label, children } => {
                for child in children {
                    child.collect_tagged(label, out);
                }
            }
        }
    }
}

/// One parsed sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceParse {
    pub words: Vec<String>,
    pub upos: Vec<Option<String>>,
    pub xpos: Vec<Option<String>>,
    /// Dependency rows aligned with `words`; present for CoNLL-U input.
    pub deps: Option<Vec<DepRow>>,
    /// Constituency tree; present for bracketed input.
    pub tree: Option<ConstTree>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseFormat {
    Conllu,
    Brackets,
}

pub fn parse_file<R: BufRead>(reader: R, format: ParseFormat) -> Result<Vec<SentenceParse>> {
    match format {
        ParseFormat::Conllu => parse_conllu(reader),
        ParseFormat::Brackets => parse_brackets(reader),
    }
}

/// CoNLL-U reader: 10 tab-separated columns, `#` comments ignored, blank
/// lines separate sentences. Multiword-token ranges (`1-2`) and empty nodes
/// (`1.1`) are skipped; they carry no basic dependency.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<SentenceParse>> {
    let mut sentences = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut upos: Vec<Option<String>> = Vec::new();
    let mut xpos: Vec<Option<String>> = Vec::new();
    let mut deps: Vec<DepRow> = Vec::new();

    let flush = |words: &mut Vec<String>,
                     upos: &mut Vec<Option<String>>,
                     xpos: &mut Vec<Option<String>>,
                     deps: &mut Vec<DepRow>,
                     sentences: &mut Vec<SentenceParse>|
     -> Result<()> {
        if words.is_empty() {
            return Ok(());
        }
        let sentence_index = sentences.len() + 1;
        validate_dependency_tree(deps, sentence_index, words.len())?;
        sentences.push(SentenceParse {
            words: std::mem::take(words),
            upos: std::mem::take(upos),
            xpos: std::mem::take(xpos),
            deps: Some(std::mem::take(deps)),
            tree: None,
        });
        Ok(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            flush(&mut words, &mut upos, &mut xpos, &mut deps, &mut sentences)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(RavenError::MalformedLine {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        // Skip multiword ranges and empty nodes.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| RavenError::MalformedLine {
            line: lineno,
            message: format!("bad token id {:?}", cols[0]),
        })?;
        if id != words.len() + 1 {
            return Err(RavenError::MalformedLine {
                line: lineno,
                message: format!("token id {id} out of sequence"),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| RavenError::MalformedLine {
            line: lineno,
            message: format!("bad head {:?}", cols[6]),
        })?;
        words.push(cols[1].to_string());
        upos.push(non_empty(cols[3]));
        xpos.push(non_empty(cols[4]));
        deps.push(DepRow {
            head,
            rel: cols[7].to_string(),
        });
    }
    flush(&mut words, &mut upos, &mut xpos, &mut deps, &mut sentences)?;
    Ok(sentences)
}

fn non_empty(col: &str) -> Option<String> {
    (col != "_" && !col.is_empty()).then(|| col.to_string())
}

/// Heads must stay in range and form a tree rooted at the virtual ROOT.
fn validate_dependency_tree(deps: &[DepRow], sentence: usize, len: usize) -> Result<()> {
    for row in deps {
        if row.head > len {
            return Err(RavenError::InvalidHead {
                sentence,
                head: row.head,
                len,
            });
        }
    }
    // Follow parent chains; a chain longer than the sentence means a cycle.
    for start in 1..=len {
        let mut node = start;
        let mut steps = 0;
        while node != 0 {
            node = deps[node - 1].head;
            steps += 1;
            if steps > len {
                return Err(RavenError::CyclicHeads { sentence });
            }
        }
    }
    Ok(())
}

/// Bracketed-tree reader: one Penn-style tree per line, blank lines skipped.
/// `-LRB-`-family escapes in leaf tokens are decoded to the literal bracket
/// characters; preterminal labels are kept verbatim.
pub fn parse_brackets<R: BufRead>(reader: R) -> Result<Vec<SentenceParse>> {
    let mut sentences = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tree = parse_bracket_line(&line, lineno)?;
        let (words, xpos): (Vec<String>, Vec<Option<String>>) = tree
            .tagged_words()
            .into_iter()
            .map(|(w, t)| (w.to_string(), (!t.is_empty()).then(|| t.to_string())))
            .unzip();
        if words.is_empty() {
            return Err(RavenError::MalformedLine {
                line: lineno,
                message: "tree has no leaves".into(),
            });
        }
        sentences.push(SentenceParse {
            upos: vec![None; words.len()],
            words,
            xpos,
            deps: None,
            tree: Some(tree),
        });
    }
    Ok(sentences)
}

fn parse_bracket_line(line: &str, lineno: usize) -> Result<ConstTree> {
    let bad = |message: String| RavenError::MalformedLine {
        line: lineno,
        message,
    };
    let mut stack: Vec<(String, Vec<ConstTree>)> = Vec::new();
    let mut root: Option<ConstTree> = None;
    let mut chars = line.char_indices().peekable();

    while let Some((_, ch)) = chars.next() {
        match ch {
            '(' => {
                if root.is_some() {
                    return Err(bad("trailing content after tree".into()));
                }
                let mut label = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    label.push(c);
                    chars.next();
                }
                stack.push((label, Vec::new()));
            }
            ')' => {
                let (label, children) = stack
                    .pop()
                    .ok_or_else(|| bad("unbalanced brackets: unexpected ')'".into()))?;
                if children.is_empty() && label.is_empty() {
                    return Err(bad("empty constituent".into()));
                }
                let node = if children.is_empty() {
                    // "(word)" with no inner structure is not a constituent
                    return Err(bad(format!("constituent {label:?} has no children")));
                } else {
                    ConstTree::Node { label, children }
                };
                match stack.last_mut() {
                    Some((_, parent_children)) => parent_children.push(node),
                    None => root = Some(node),
                }
            }
            c if c.is_whitespace() => {}
            _ => {
                if stack.is_empty() {
                    return Err(bad("token outside brackets".into()));
                }
                let mut word = String::from(ch);
                while let Some(&(_, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                let word = unescape_ptb(&word);
                stack.last_mut().unwrap().1.push(ConstTree::Leaf { word });
            }
        }
    }
    if !stack.is_empty() {
        return Err(bad("unbalanced brackets: missing ')'".into()));
    }
    let mut tree = root.ok_or_else(|| bad("no tree on line".into()))?;
    // Unwrap unlabeled singleton wrappers like "( (S ...) )".
    loop {
        match tree {
            ConstTree::Node {
                ref label,
                ref mut children,
            } if label.is_empty() && children.len() == 1 => {
                tree = children.pop().unwrap();
            }
            _ => break,
        }
    }
    Ok(tree)
}

fn unescape_ptb(word: &str) -> String {
    match word {
        "-LRB-" => "(".into(),
        "-RRB-" => ")".into(),
        "-LCB-" => "{".into(),
        "-RCB-" => "}".into(),
        "-LSB-" => "[".into(),
        "-RSB-" => "]".into(),
        _ => word.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAT: &str = "\
# sent_id = 1
1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_
2\tcat\tcat\tNOUN\tNN\t_\t3\tnsubj\t_\t_
3\tsleeps\tsleep\tVERB\tVBZ\t_\t0\troot\t_\t_
";

    #[test]
    fn conllu_basic_sentence() {
        let parses = parse_conllu(CAT.as_bytes()).unwrap();
        assert_eq!(parses.len(), 1);
        let s = &parses[0];
        assert_eq!(s.words, vec!["The", "cat", "sleeps"]);
        assert_eq!(s.upos[0].as_deref(), Some("DET"));
        assert_eq!(s.xpos[2].as_deref(), Some("VBZ"));
        let deps = s.deps.as_ref().unwrap();
        assert_eq!(deps[0], DepRow { head: 2, rel: "det".into() });
        assert_eq!(deps[2], DepRow { head: 0, rel: "root".into() });
        assert!(s.tree.is_none());
    }

    #[test]
    fn conllu_head_out_of_range() {
        let text = "1\tThe\t_\t_\t_\t_\t5\tdet\t_\t_\n";
        let err = parse_conllu(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("invalid head"), "{err}");
    }

    #[test]
    fn conllu_cycle_detected() {
        let text = "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n";
        let err = parse_conllu(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("cyclic heads"), "{err}");
    }

    #[test]
    fn conllu_skips_ranges_and_empty_nodes() {
        let text = "\
1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_
1\tde\t_\tADP\t_\t_\t2\tcase\t_\t_
2\tel\t_\tDET\t_\t_\t0\troot\t_\t_
2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_
";
        let parses = parse_conllu(text.as_bytes()).unwrap();
        assert_eq!(parses[0].words, vec!["de", "el"]);
    }

    #[test]
    fn conllu_multiple_roots_allowed() {
        let text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n";
        assert_eq!(parse_conllu(text.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn brackets_basic_tree() {
        let parses =
            parse_brackets("(S (NP (DT The) (NN cat)) (VP (VBZ sleeps)))".as_bytes()).unwrap();
        assert_eq!(parses.len(), 1);
        let s = &parses[0];
        assert_eq!(s.words, vec!["The", "cat", "sleeps"]);
        assert_eq!(s.xpos[0].as_deref(), Some("DT"));
        assert_eq!(
            s.tree.as_ref().unwrap().leaves(),
            vec!["The", "cat", "sleeps"]
        );
    }

    #[test]
    fn brackets_unwraps_outer_shell() {
        let parses = parse_brackets("( (S (NP (NN dogs)) (VP (VBP bark))) )".as_bytes()).unwrap();
        let tree = parses[0].tree.as_ref().unwrap();
        match tree {
            ConstTree::Node { label, .. } => assert_eq!(label, "S"),
            _ => panic!("expected node"),
        }
    }

    #[test]
    fn brackets_imbalance_reports_line() {
        let err = parse_brackets("(S (NP (DT The)\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
        let err = parse_brackets("\n(S (X a)))\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
    }

    #[test]
    fn brackets_unescapes_leaf_parens() {
        let parses = parse_brackets("(S (-LRB- -LRB-) (NN x) (-RRB- -RRB-))".as_bytes()).unwrap();
        let s = &parses[0];
        assert_eq!(s.words, vec!["(", "x", ")"]);
        // labels keep the escaped form
        assert_eq!(s.xpos[0].as_deref(), Some("-LRB-"));
    }

    #[test]
    fn brackets_one_tree_per_line() {
        let text = "(S (NN a))\n(S (NN b))\n";
        let parses = parse_brackets(text.as_bytes()).unwrap();
        assert_eq!(parses.len(), 2);
        let err = parse_brackets("(S (NN a)) (S (NN b))".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("trailing content"), "{err}");
    }
}
