//! End-to-end runs of the compiled binary: argument parsing, file flows,
//! exit codes.

use std::path::Path;
use std::process::Command;

fn raven() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raven"))
}

fn write_fixtures(dir: &Path) {
    std::fs::write(dir.join("train.txt"), "a b c a b d\nc a b c\n").unwrap();
    std::fs::write(
        dir.join("gens.jsonl"),
        concat!(
            "{\"id\":\"g1\",\"prompt\":\"\",\"continuation\":\"a b d c\"}\n",
            "{\"id\":\"g2\",\"prompt\":\"a b\",\"continuation\":\"c a b c a b d\"}\n",
        ),
    )
    .unwrap();
}

#[test]
fn index_build_then_ngram_report() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = raven()
        .current_dir(dir.path())
        .args([
            "index", "build", "--corpus", "train.txt", "--out", "train.idx",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("train.idx").is_file());
    assert!(dir.path().join("train.idx.vocab").is_file());

    let out = raven()
        .current_dir(dir.path())
        .args([
            "ngram",
            "--index",
            "train.idx",
            "--generations",
            "gens.jsonl",
            "--nmax",
            "4",
            "--out",
            "report.csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.contains("n,total,novel,fraction"));
    assert!(report.contains("2,9,1,"));
}

#[test]
fn missing_index_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = raven()
        .current_dir(dir.path())
        .args([
            "ngram",
            "--index",
            "nope.idx",
            "--generations",
            "gens.jsonl",
            "--out",
            "x.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("index not found"), "{stderr}");
}

#[test]
fn prompts_sample_roundtrips_through_ngram() {
    let dir = tempfile::tempdir().unwrap();
    // a long-enough synthetic test corpus
    let text: String = (0..400)
        .map(|i| format!("w{} ", i % 17))
        .collect::<String>();
    std::fs::write(dir.path().join("test.txt"), format!("{text}\n")).unwrap();
    std::fs::write(dir.path().join("train2.txt"), format!("{text}\n")).unwrap();

    let out = raven()
        .current_dir(dir.path())
        .args([
            "prompts", "sample", "--corpus", "test.txt", "--count", "5", "--prompt-len", "4",
            "--continuation-len", "10", "--seed", "3", "--out", "prompts.jsonl",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<String> = std::fs::read_to_string(dir.path().join("prompts.jsonl"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(lines.len(), 5);
    for line in &lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["prompt"].as_str().unwrap().split_whitespace().count(), 4);
        assert_eq!(
            v["continuation"].as_str().unwrap().split_whitespace().count(),
            10
        );
    }

    // the sampled records are themselves valid generations input
    let out = raven()
        .current_dir(dir.path())
        .args([
            "index", "build", "--corpus", "train2.txt", "--out", "t.idx",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = raven()
        .current_dir(dir.path())
        .args([
            "ngram",
            "--index",
            "t.idx",
            "--generations",
            "prompts.jsonl",
            "--nmax",
            "3",
            "--out",
            "baseline.csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // the baseline is a verbatim slice of the training corpus: zero novelty
    let report = std::fs::read_to_string(dir.path().join("baseline.csv")).unwrap();
    for line in report.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let novel = line.split(',').nth(2).unwrap();
        assert_eq!(novel, "0", "{line}");
    }
}

#[test]
fn syntax_subcommand_with_bracket_trees() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("train.trees"),
        "(S (NP (DT The) (NN cat)) (VP (VBZ sleeps)))\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("gen.trees"),
        "(S (NP (DT A) (NN dog)) (VP (VBZ barks)))\n(S (VP (VBZ runs)))\n",
    )
    .unwrap();
    let out = raven()
        .current_dir(dir.path())
        .args([
            "syntax",
            "--kind",
            "posseq",
            "--train-parses",
            "train.trees",
            "--gen-parses",
            "gen.trees",
            "--out",
            "syn.csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("syn.csv")).unwrap();
    // first generated sentence shares the training POS sequence, second not
    assert!(report.contains("posseq,sentence,2,1,0.5"), "{report}");
}

#[test]
fn jobs_env_var_accepted() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = raven()
        .current_dir(dir.path())
        .env("RAVEN_JOBS", "2")
        .args([
            "index", "build", "--corpus", "train.txt", "--out", "train.idx",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
