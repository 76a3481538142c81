use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn punctasr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_punctasr"))
        .args(args)
        .output()
        .expect("spawn punctasr")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).expect("write fixture");
    path
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn jsonl(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

const REFS: &str = "{\"id\":\"a\",\"text\":\"Hello, world.\"}\n{\"id\":\"b\",\"text\":\"Go now!\"}\n";

#[test]
fn version_flag_reports_versions() {
    let out = punctasr(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
    assert!(text.contains("checkpoint format"));
}

#[test]
fn identical_files_score_zero() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "ref.jsonl", REFS);
    let score = stdout_json(&punctasr(&["score", s(&r), s(&r)]));
    for metric in ["wer", "puncer", "caseer", "pcwer"] {
        assert_eq!(score["corpus"][metric]["percent"], "0.00", "{metric}");
    }
}

#[test]
fn worked_example_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "ref.jsonl", "{\"id\":\"a\",\"text\":\"Hello, world.\"}\n");
    let h = write(&dir, "hyp.jsonl", "{\"id\":\"a\",\"text\":\"hello world\"}\n");
    let score = stdout_json(&punctasr(&["score", s(&r), s(&h)]));
    let corpus = &score["corpus"];
    assert_eq!(corpus["wer"]["percent"], "0.00");
    assert_eq!(corpus["puncer"]["percent"], "100.00");
    assert_eq!(corpus["caseer"]["percent"], "100.00");
    assert_eq!(corpus["pcwer"]["percent"], "75.00");
}

#[test]
fn score_output_is_thread_invariant() {
    let dir = TempDir::new().unwrap();
    let mut refs = String::new();
    let mut hyps = String::new();
    for i in 0..50 {
        refs.push_str(&format!("{{\"id\":\"u{i}\",\"text\":\"Tom saw the dog, again {i}.\"}}\n"));
        hyps.push_str(&format!("{{\"id\":\"u{i}\",\"text\":\"tom saw a dog again {}\"}}\n", i % 7));
    }
    let r = write(&dir, "ref.jsonl", &refs);
    let h = write(&dir, "hyp.jsonl", &hyps);
    let one = punctasr(&["score", "--per-utt", "--threads", "1", s(&r), s(&h)]);
    assert!(one.status.success());
    for threads in ["2", "4"] {
        let other = punctasr(&["score", "--per-utt", "--threads", threads, s(&r), s(&h)]);
        assert_eq!(one.stdout, other.stdout, "threads {threads}");
    }
}

#[test]
fn id_mismatch_exits_two() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "ref.jsonl", REFS);
    let h = write(&dir, "hyp.jsonl", "{\"id\":\"a\",\"text\":\"hello world\"}\n");
    let out = punctasr(&["score", s(&r), s(&h)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('b'));
}

#[test]
fn bad_config_exits_three() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "ref.jsonl", REFS);
    let cfg = write(&dir, "cfg.json", "{\"punctuation\": {\"marks\": 7}, \"surprise\": true}");
    let out = punctasr(&["--config", s(&cfg), "score", s(&r), s(&r)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn normalize_strips_punctuation_and_case() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "ref.jsonl", REFS);
    let rows = jsonl(&punctasr(&["normalize", s(&r)]));
    let texts: Vec<&str> = rows.iter().map(|r| r["text"].as_str().unwrap()).collect();
    assert_eq!(texts, ["hello world", "go now"]);
}

/// Synthesizes a small corpus and trains for a couple of epochs.
fn trained(dir: &TempDir, arch: &str, extra: &[&str]) -> (PathBuf, PathBuf, Output) {
    let synth = punctasr(&["synth", "--n", "12", "--seed", "5"]);
    assert!(synth.status.success());
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(&corpus, &synth.stdout).unwrap();
    let ckpt = dir.path().join(format!("{arch}.ckpt.json"));
    let mut args = vec![
        "train",
        s(&corpus),
        "--arch",
        arch,
        "--epochs",
        "2",
        "--batch-size",
        "4",
        "--hidden",
        "16",
        "--token-embed-dim",
        "4",
        "--seed",
        "9",
        "--out",
        s(&ckpt),
    ];
    args.extend_from_slice(extra);
    let out = punctasr(&args);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    (corpus, ckpt, out)
}

#[test]
fn training_log_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (_, _, first) = trained(&a, "cond", &["--p-fraction", "0.5"]);
    let (_, _, second) = trained(&b, "cond", &["--p-fraction", "0.5"]);
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn alpha_one_trains_on_the_punctuated_loss_only() {
    let dir = TempDir::new().unwrap();
    let (_, _, out) = trained(&dir, "cond", &["--alpha", "1.0"]);
    for row in jsonl(&out) {
        assert_eq!(row["loss"], row["loss_p"], "{row}");
    }
}

#[test]
fn conditioned_checkpoint_decodes_both_modes() {
    let dir = TempDir::new().unwrap();
    let (corpus, ckpt, _) = trained(&dir, "cond", &[]);
    let rows = jsonl(&punctasr(&["decode", s(&ckpt), s(&corpus), "--mode", "both"]));
    assert_eq!(rows.len(), 24);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0]["id"], pair[1]["id"]);
        assert_eq!(pair[0]["mode"], "norm");
        assert_eq!(pair[1]["mode"], "punct");
    }
}

#[test]
fn punctuated_only_checkpoint_rejects_normalized_mode() {
    let dir = TempDir::new().unwrap();
    let (corpus, ckpt, _) = trained(&dir, "punct-only", &[]);
    let out = punctasr(&["decode", s(&ckpt), s(&corpus), "--mode", "norm"]);
    assert_eq!(out.status.code(), Some(3));
    let rows = jsonl(&punctasr(&["decode", s(&ckpt), s(&corpus), "--mode", "punct"]));
    assert_eq!(rows.len(), 12);
}

#[test]
fn rtf_bench_requires_audio_duration() {
    let dir = TempDir::new().unwrap();
    let (corpus, ckpt, _) = trained(&dir, "2dec", &[]);
    let report = stdout_json(&punctasr(&["rtf-bench", s(&ckpt), s(&corpus)]));
    assert_eq!(report["utterances"].as_array().unwrap().len(), 12);

    let text = std::fs::read_to_string(&corpus).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let row = serde_json::json!({ "id": first["id"], "features": first["features"] });
    let bare = write(&dir, "bare.jsonl", &format!("{row}\n"));
    let out = punctasr(&["rtf-bench", s(&ckpt), s(&bare)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn significance_of_identical_systems() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "ref.jsonl", REFS);
    let h = write(&dir, "hyp.jsonl", "{\"id\":\"a\",\"text\":\"hello world\"}\n{\"id\":\"b\",\"text\":\"go now\"}\n");
    let result = stdout_json(&punctasr(&["significance", s(&r), s(&h), s(&h), "--metric", "pcwer"]));
    assert_eq!(result["p_value"], 1.0);
}
