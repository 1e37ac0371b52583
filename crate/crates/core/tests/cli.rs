//! The `clan` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use clan::model::{init, Checkpoint};

fn clan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clan"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = clan(dir, args);
    assert!(
        out.status.success(),
        "clan {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: [&str; 6] = ["--hidden-width", "64", "--latent-width", "16", "--batch-size", "128"];

#[test]
fn synth_pretrain_centroid_score_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--benign", "1000", "--malicious", "200", "--seed", "7", "-o", "data.csv"]);
    ok(d, &["split", "-i", "data.csv", "--seed", "3"]);
    let mut args = vec!["pretrain", "-i", "train.csv", "-o", "enc.clan", "--epochs", "10"];
    args.extend(SMALL);
    ok(d, &args);
    assert!(d.join("enc.loss.csv").exists());
    ok(d, &["centroid", "--checkpoint", "enc.clan", "-i", "train.csv", "-o", "cen.clan"]);
    ok(d, &["score", "--checkpoint", "enc.clan", "--centroid", "cen.clan", "-i", "test.csv", "-o", "scores.csv"]);
    let header = std::fs::read_to_string(d.join("scores.csv")).unwrap();
    assert!(header.starts_with("row,distance,prob_benign,predicted_label,label,class\n"));
    let out = ok(d, &["eval-binary", "-s", "scores.csv", "-o", "report.csv"]);
    assert!(out.contains("mean AUROC"), "{out}");
    let report = std::fs::read_to_string(d.join("report.csv")).unwrap();
    assert!(report.starts_with("class,auroc,n_benign,n_class\n"));
    assert!(report.lines().any(|l| l.starts_with("Mean,")));
}

#[test]
fn mismatched_metric_is_a_contract_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--benign", "200", "--malicious", "20", "-o", "data.csv"]);
    let mut args = vec!["pretrain", "-i", "data.csv", "-o", "enc.clan", "--epochs", "1"];
    args.extend(SMALL);
    ok(d, &args);
    ok(d, &["centroid", "--checkpoint", "enc.clan", "-i", "data.csv", "-o", "cen.clan"]);
    let out = clan(
        d,
        &["score", "--checkpoint", "enc.clan", "--centroid", "cen.clan", "-i", "data.csv", "--metric", "squared_euclidean"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contract"));
}

#[test]
fn zero_epochs_writes_the_initial_encoder() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--benign", "100", "--malicious", "0", "--features", "5", "-o", "data.csv"]);
    let mut args = vec!["pretrain", "-i", "data.csv", "-o", "enc.clan", "--epochs", "0", "--seed", "4"];
    args.extend(SMALL);
    ok(d, &args);
    let ckpt = Checkpoint::load(d.join("enc.clan")).unwrap();
    assert_eq!(ckpt.params, init(&ckpt.config).unwrap());
    assert_eq!(ckpt.config.seed, 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.cfg"), "benign = 50\nmalicious = 5\nfeatures = 3\noutput = from_file.csv\n").unwrap();
    ok(d, &["synth", "--config", "run.cfg", "--benign", "20"]);
    let text = std::fs::read_to_string(d.join("from_file.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 20 + 5);
    assert_eq!(text.lines().next().unwrap(), "f0,f1,f2,label");

    std::fs::write(d.join("bad.cfg"), "benign = 50\nnot_an_option = 1\n").unwrap();
    assert_eq!(clan(d, &["synth", "--config", "bad.cfg"]).status.code(), Some(1));
}

#[test]
fn finetune_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--benign", "300", "--malicious", "90", "--features", "6", "-o", "data.csv"]);
    let mut args = vec!["pretrain", "-i", "data.csv", "-o", "enc.clan", "--epochs", "2"];
    args.extend(SMALL);
    ok(d, &args);
    let out = ok(
        d,
        &["finetune", "--checkpoint", "enc.clan", "-i", "data.csv", "-o", "cls.clan", "--runs", "2", "--epochs", "3"],
    );
    assert!(out.contains("mean macro-F1"), "{out}");
    assert!(d.join("cls.clan").exists());

    let out = ok(d, &["bench-inference", "--sizes", "100,1000", "--queries", "8", "-o", "bench.csv"]);
    assert!(out.contains("ratio"));
    assert!(std::fs::read_to_string(d.join("bench.csv")).unwrap().starts_with("n_train,"));
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(clan(d, &["pretrain", "--bogus"]).status.code(), Some(1));
    assert_eq!(clan(d, &["pretrain"]).status.code(), Some(1));
    let missing = clan(d, &["pretrain", "-i", "nope.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());
    assert_eq!(clan(d, &["--help"]).status.code(), Some(0));
}
