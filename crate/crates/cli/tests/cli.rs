use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn memocl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memocl"))
        .args(args)
        .env_remove("MEMOCL_OUT_DIR")
        .output()
        .expect("spawn memocl")
}

fn ok(args: &[&str]) -> String {
    let out = memocl(args);
    assert!(
        out.status.success(),
        "memocl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(args: &[&str], code: i32) -> String {
    let out = memocl(args);
    assert_eq!(out.status.code(), Some(code), "memocl {args:?}");
    String::from_utf8(out.stderr).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/benchmark")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Trains a checkpoint on the shipped fixture into `dir` and returns its path.
fn train(dir: &Path) -> PathBuf {
    ok(&["train", "--data", &fixture("train.jsonl"), "--lexicon", &fixture("lexicon.tsv"),
        "--vectors", &fixture("vectors.txt"), "--rules", &fixture("rules.tsv"), "--out", s(dir)]);
    dir.join("checkpoint.json")
}

fn aug_args() -> Vec<String> {
    ["--lexicon", "lexicon.tsv", "--vectors", "vectors.txt", "--rules", "rules.tsv"]
        .iter()
        .enumerate()
        .map(|(i, a)| if i % 2 == 1 { fixture(a) } else { a.to_string() })
        .collect()
}

fn with_aug<'a>(base: &[&'a str], aug: &'a [String]) -> Vec<&'a str> {
    let mut v = base.to_vec();
    v.extend(aug.iter().map(String::as_str));
    v
}

fn write_dataset(path: &Path, rows: &[(&str, usize)]) {
    let mut text = String::from("{\"format\":\"dataset\",\"version\":1,\"num_classes\":2,\"num_groups\":2}\n");
    for (t, l) in rows {
        text.push_str(&format!("{{\"text\":\"{t}\",\"label\":{l},\"groups\":[{}]}}\n", l));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn missing_input_names_the_path() {
    let tmp = TempDir::new().unwrap();
    let err = fails_with(&["train", "--data", "/no/such/train.jsonl", "--out", s(tmp.path())], 2);
    assert!(err.contains("/no/such/train.jsonl"), "{err}");
}

#[test]
fn unknown_method_lists_the_choices() {
    let tmp = TempDir::new().unwrap();
    let err = fails_with(&["evaluate", "--method", "magic", "--checkpoint", "c", "--data", "d", "--out", s(tmp.path())], 2);
    assert!(err.contains("tta-average") && err.contains("baseline"), "{err}");
}

#[test]
fn bad_configurations_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    let ckpt = train(&tmp.path().join("model"));
    let aug = aug_args();
    let shifted = fixture("shifted_test.jsonl");
    let out = tmp.path().join("eval");
    let base = ["evaluate", "--checkpoint", s(&ckpt), "--data", &shifted, "--out", s(&out)];

    let err = fails_with(&with_aug(&[&base[..], &["--method", "tta-weighted"]].concat(), &aug), 2);
    assert!(err.contains("calibration"), "{err}");
    fails_with(&with_aug(&[&base[..], &["--method", "tta-average", "--num-aug", "0"]].concat(), &aug), 2);
    fails_with(
        &with_aug(&["adapt", "--mode", "memo", "--checkpoint", s(&ckpt), "--data", &shifted, "--delta", "2", "--out", s(&out)], &aug),
        2,
    );
}

#[test]
fn report_rejects_logs_over_different_samples() {
    let tmp = TempDir::new().unwrap();
    let ckpt = train(&tmp.path().join("model"));
    let aug = aug_args();
    let out = tmp.path().join("eval");
    for m in ["baseline", "tta-soft"] {
        ok(&with_aug(&["evaluate", "--method", m, "--checkpoint", s(&ckpt), "--data", &fixture("shifted_test.jsonl"), "--num-aug", "4", "--out", s(&out)], &aug));
    }
    let soft = out.join("tta-soft-seed0.jsonl");
    let text = fs::read_to_string(&soft).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let last = lines.len() - 1;
    lines[last] = lines[last].replacen("\"sample_id\":", "\"sample_id\":9", 1);
    fs::write(&soft, lines.join("\n") + "\n").unwrap();
    fails_with(&["report", s(&out.join("baseline-seed0.jsonl")), s(&soft), "--out", s(&tmp.path().join("r"))], 2);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let a = train(&tmp.path().join("a"));
    let b = train(&tmp.path().join("b"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let aug = aug_args();
    let shifted = fixture("shifted_test.jsonl");
    let run = |dir: &Path| {
        ok(&with_aug(&["evaluate", "--method", "baseline", "--checkpoint", s(&a), "--data", &shifted, "--out", s(dir)], &aug));
        ok(&with_aug(&["evaluate", "--method", "tta-hard", "--checkpoint", s(&a), "--data", &shifted, "--seed", "3", "--num-aug", "6", "--out", s(dir)], &aug));
        ok(&with_aug(&["adapt", "--mode", "memo-cl", "--lr", "0.02", "--max-attempts", "50", "--checkpoint", s(&a), "--data", &shifted, "--seed", "3", "--out", s(dir)], &aug));
        ok(&["report", s(&dir.join("baseline-seed0.jsonl")), s(&dir.join("tta-hard-seed3.jsonl")),
            s(&dir.join("memo-cl+smf-seed3.jsonl")), "--out", s(dir)]);
    };
    let (x, y) = (tmp.path().join("x"), tmp.path().join("y"));
    run(&x);
    run(&y);
    for f in ["baseline-seed0.jsonl", "tta-hard-seed3.jsonl", "memo-cl+smf-seed3.jsonl", "report.txt", "report.jsonl"] {
        assert_eq!(fs::read(x.join(f)).unwrap(), fs::read(y.join(f)).unwrap(), "{f}");
    }
    for f in ["baseline.manifest.json", "tta-hard.manifest.json", "memo-cl+smf.manifest.json"] {
        assert!(x.join(f).is_file(), "{f}");
    }
}

#[test]
fn both_modes_agree_on_one_sample() {
    let tmp = TempDir::new().unwrap();
    let ckpt = train(&tmp.path().join("model"));
    let one = tmp.path().join("one.jsonl");
    let all = fs::read_to_string(fixture("shifted_test.jsonl")).unwrap();
    fs::write(&one, all.lines().take(2).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    let aug = aug_args();
    let out = tmp.path().join("out");
    for mode in ["memo", "memo-cl"] {
        ok(&with_aug(&["adapt", "--mode", mode, "--lr", "1", "--checkpoint", s(&ckpt), "--data", s(&one), "--out", s(&out)], &aug));
    }
    let strip = |f: &str| fs::read_to_string(out.join(f)).unwrap().replacen("\"memo-cl+smf\"", "\"memo+smf\"", 1);
    assert_eq!(strip("memo+smf-seed0.jsonl"), strip("memo-cl+smf-seed0.jsonl"));
}

#[test]
fn hard_vote_over_identity_copies_is_the_baseline() {
    let tmp = TempDir::new().unwrap();
    let ckpt = train(&tmp.path().join("model"));
    let out = tmp.path().join("out");
    for m in ["baseline", "tta-hard"] {
        ok(&["evaluate", "--method", m, "--checkpoint", s(&ckpt), "--data", &fixture("shifted_test.jsonl"), "--out", s(&out)]);
    }
    let labels = |f: &str| -> Vec<String> {
        fs::read_to_string(out.join(f))
            .unwrap()
            .lines()
            .map(|l| l.split("\"predicted_label\":").nth(1).unwrap().split(',').next().unwrap().to_string())
            .collect()
    };
    assert_eq!(labels("baseline-seed0.jsonl"), labels("tta-hard-seed0.jsonl"));
}

#[test]
fn separable_toy_data_is_learned() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("toy.jsonl");
    write_dataset(&data, &[("good", 1), ("great fun", 1), ("good film", 1), ("bad", 0), ("awful film", 0), ("bad fun", 0)]);
    let stdout = ok(&["train", "--data", s(&data), "--epochs", "60", "--out", s(tmp.path())]);
    assert!(stdout.contains("training accuracy 1.0000"), "{stdout}");
    assert!(tmp.path().join("train.manifest.json").is_file());
}
