use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gri(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gri"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn gri")
}

fn ok(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

const SMALL: &[&str] = &[
    "--vocab-size", "60", "--sentences", "600", "--synth-train", "30", "--synth-test", "15",
    "--dim", "8", "--epochs", "1", "--lr", "0.01", "--batch-size", "128",
];

fn synth(dir: &Path) {
    let mut args = vec!["synth", "--output-dir", "syn"];
    args.extend_from_slice(SMALL);
    ok(&gri(dir, &args));
}

#[test]
fn synth_train_eval_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    for f in ["source.txt", "target.txt", "lexicon.txt", "target.vec", "synth.conf", "synth.json"] {
        assert!(d.join("syn").join(f).is_file(), "{f}");
    }
    ok(&gri(d, &["build-vocab", "-c", "syn/synth.conf", "--output-dir", "v"]));
    assert!(fs::read_to_string(d.join("v/vocab.tsv")).unwrap().lines().count() > 0);
    let g = ok(&gri(d, &["build-graph", "-c", "syn/synth.conf", "--output-dir", "g"]));
    assert_eq!(g["nodes"], 60);

    let t = ok(&gri(d, &["train", "-c", "syn/synth.conf", "--epochs", "1", "--batch-size", "128", "--output-dir", "syn"]));
    assert_eq!(t["runs"][0]["epochs"].as_array().unwrap().len(), 1);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("syn/train.json")).unwrap()).unwrap();
    assert_eq!(meta["meta"]["command"], "train");
    assert_eq!(meta["meta"]["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["meta"]["config"]["alpha"], "0.7");

    let e = ok(&gri(d, &["eval", "-c", "syn/synth.conf", "--output-dir", "syn"]));
    let p = e["eval"]["p_at_1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(e["eval"]["n_queries"], 15);
    let preds = fs::read_to_string(d.join("syn/predictions.tsv")).unwrap();
    assert_eq!(preds.lines().count(), 17);
    assert!(preds.starts_with("# gri "));
    ok(&gri(d, &["metrics", "-c", "syn/synth.conf", "--output-dir", "m"]));
    assert!(d.join("m/metrics.json").is_file());
}

#[test]
fn self_evaluation_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    // the target space evaluated against itself through an identity lexicon
    let vec = fs::read_to_string(d.join("syn/target.vec")).unwrap();
    let words: Vec<&str> = vec.lines().skip(1).map(|l| l.split(' ').next().unwrap()).collect();
    let lex: String = words.iter().map(|w| format!("{w} {w}\n")).collect();
    fs::write(d.join("self.txt"), lex).unwrap();
    let e = ok(&gri(
        d,
        &[
            "eval", "--source-embeddings", "syn/target.vec", "--target-embeddings", "syn/target.vec",
            "--lexicon", "self.txt", "--train-end", "40", "--test-end", "60", "--output-dir", "self",
        ],
    ));
    assert_eq!(e["eval"]["p_at_1"], 1.0);
    assert!(e["isometry"]["eigsim"].as_f64().unwrap().abs() < 1e-9);
    assert!((e["isometry"]["pearson_r"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn training_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let train = |out: &str| ok(&gri(d, &["train", "-c", "syn/synth.conf", "--epochs", "1", "--output-dir", out]));
    let a = train("a");
    let b = train("b");
    assert_eq!(a["runs"][0]["epochs"], b["runs"][0]["epochs"]);
    assert_eq!(fs::read(d.join("a/source.vec")).unwrap(), fs::read(d.join("b/source.vec")).unwrap());
    let c = ok(&gri(d, &["train", "-c", "syn/synth.conf", "--epochs", "1", "--rng-seed", "2", "--output-dir", "c"]));
    assert_ne!(a["runs"][0]["epochs"], c["runs"][0]["epochs"]);

    let before = fs::read(d.join("a/train.json")).unwrap();
    train("a");
    assert_eq!(before, fs::read(d.join("a/train.json")).unwrap());
    let eval = || {
        ok(&gri(d, &["eval", "-c", "syn/synth.conf", "--source-embeddings", "a/source.vec", "--output-dir", "a"]));
        (fs::read(d.join("a/eval.json")).unwrap(), fs::read(d.join("a/predictions.tsv")).unwrap())
    };
    assert_eq!(eval(), eval());
}

#[test]
fn repeated_runs_report_mean_and_spread() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let t = ok(&gri(d, &["train", "-c", "syn/synth.conf", "--epochs", "1", "--runs", "3", "--output-dir", "r"]));
    let ps: Vec<f64> = t["runs"].as_array().unwrap().iter().map(|r| r["p_at_1"].as_f64().unwrap()).collect();
    assert_eq!(ps.len(), 3);
    let mean = ps.iter().sum::<f64>() / 3.0;
    assert!((t["p_at_1_mean"].as_f64().unwrap() - mean).abs() < 1e-12);
    assert!(t["p_at_1_std"].as_f64().unwrap() >= 0.0);
    for k in 0..3 {
        assert!(d.join(format!("r/run{k}/source.vec")).is_file());
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(gri(d, &["train", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(gri(d, &["train", "--alpha", "2"]).status.code(), Some(2));
    assert_eq!(gri(d, &["train", "--source-corpus", "missing.txt"]).status.code(), Some(2));

    fs::write(d.join("bad.conf"), "alpha 0.5\n").unwrap();
    assert_eq!(gri(d, &["train", "-c", "bad.conf"]).status.code(), Some(3));

    fs::write(d.join("empty.txt"), "\n\n").unwrap();
    assert_eq!(gri(d, &["build-vocab", "--source-corpus", "empty.txt"]).status.code(), Some(3));

    synth(d);
    fs::write(d.join("huge.vec"), {
        let vec = fs::read_to_string(d.join("syn/target.vec")).unwrap();
        let mut lines = vec.lines();
        let mut s = format!("{}\n", lines.next().unwrap());
        for l in lines {
            let mut it = l.split(' ');
            s.push_str(it.next().unwrap());
            for _ in it {
                s.push_str(" 1e300");
            }
            s.push('\n');
        }
        s
    })
    .unwrap();
    let out = gri(d, &["train", "-c", "syn/synth.conf", "--target-embeddings", "huge.vec", "--kind", "l2", "--output-dir", "h"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
