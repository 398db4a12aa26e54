use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TINY: &[&str] = &[
    "data.train_sentences=120",
    "data.valid_pairs=10",
    "data.test_pairs=12",
    "tokenizer.vocab_size=150",
    "train.epochs=1",
    "train.batch_size=8",
    "model.d_model=16",
    "model.d_ff=32",
    "model.heads=2",
];

fn btlab(args: &[&str], sets: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_btlab"));
    cmd.args(args).env("RUST_LOG", "warn");
    for s in sets {
        cmd.arg("--set").arg(s);
    }
    cmd.output().expect("spawn btlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    let bad_grammar = btlab(&["gen-lang", "--profile", "mini", "--out", out], &["languages.a=\"01\""]);
    assert_eq!(code(&bad_grammar), 2, "{}", String::from_utf8_lossy(&bad_grammar.stderr));
    assert_eq!(code(&btlab(&["gen-lang", "--profile", "huge", "--out", out], &[])), 2);
    assert_eq!(code(&btlab(&["gen-lang", "--profile", "mini", "--out", out], &["train.no_such_key=1"])), 2);
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[model]\nheads = 3\n").unwrap();
    let o = btlab(&["gen-lang", "--profile", "mini", "--config", cfg.to_str().unwrap(), "--out", out], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn gen_lang_and_gen_corpus_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let lang = tmp.path().join("lang");
    let o = btlab(&["gen-lang", "--profile", "mini", "--out", lang.to_str().unwrap()], TINY);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "manifest.json", "lexicon_a.tsv", "lexicon_b.tsv", "dictionary.tsv"] {
        assert!(lang.join(f).exists(), "{f} missing");
    }
    assert!(!lang.join("corpus").exists());

    let corpus = tmp.path().join("corpus");
    let o = btlab(&["gen-corpus", "--profile", "mini", "--out", corpus.to_str().unwrap()], TINY);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(corpus.join("corpus/train.a")).unwrap();
    assert_eq!(text.lines().count(), 120);
    assert!(corpus.join("tokenizer.merges").exists());
    let m = manifest(&corpus);
    assert!(m["tokenizer_sha256"].is_string());
    assert_eq!(m["corpus_sha256"].as_object().unwrap().len(), 8);
    assert!(m["failed_stage"].is_null());
}

#[test]
fn divergence_exits_with_three_and_records_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut sets = TINY.to_vec();
    sets.push("train.adam.lr=inf");
    let o = btlab(&["train", "--profile", "mini", "--out", out.to_str().unwrap()], &sets);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["failed_stage"], "train");
    let last = m["stages"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["status"], "failed");
    assert!(out.join("diverged_trainlog.tsv").exists());
}

#[test]
fn run_eval_and_report_are_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = btlab(&["run", "--profile", "mini", "--out", a.to_str().unwrap()], TINY);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut sets = TINY.to_vec();
    sets.push("languages.b=\"100000\"");
    sets.push("name=\"other\"");
    assert_eq!(code(&btlab(&["run", "--profile", "mini", "--out", b.to_str().unwrap()], &sets)), 0);

    let first = std::fs::read_to_string(a.join("eval.json")).unwrap();
    let re = btlab(&["eval", "--run", a.to_str().unwrap()], &[]);
    assert_eq!(code(&re), 0, "{}", String::from_utf8_lossy(&re.stderr));
    assert_eq!(std::fs::read_to_string(a.join("eval.json")).unwrap(), first);

    let dirs = [a.to_str().unwrap(), b.to_str().unwrap()];
    let r1 = btlab(&["report", dirs[0], dirs[1], "--baseline", "run"], &[]);
    let r2 = btlab(&["report", dirs[0], dirs[1], "--baseline", "run"], &[]);
    assert_eq!(code(&r1), 0);
    assert_eq!(r1.stdout, r2.stdout);
    let table = String::from_utf8(r1.stdout).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("run\tmini\t000000-000000\t"));
    assert!(rows[2].starts_with("other\tmini\t000000-100000\t"));
    assert_eq!(rows[1].split('\t').nth(4), Some("+0.00"));
    assert_eq!(code(&btlab(&["report", dirs[0], "--baseline", "missing"], &[])), 2);
}

#[test]
fn presets_continue_past_failed_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("exp");
    let mut sets = TINY.to_vec();
    sets.push("train.adam.lr=inf");
    let o = btlab(
        &["run", "--profile", "mini", "--preset", "exp1", "--grammars", "000000,111111", "--seeds", "1", "--out", out.to_str().unwrap()],
        &sets,
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    for g in ["000000", "111111"] {
        let m = manifest(&out.join(format!("exp1-{g}-{g}-s0")));
        assert_eq!(m["failed_stage"], "train");
    }
    assert!(out.join("analysis.json").exists());
}
