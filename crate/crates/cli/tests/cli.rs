use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn msax(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msax"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = msax(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    msax(dir, args).status.code().expect("exit code")
}

/// Every data-producing command, with fixed seeds.
fn produce(dir: &Path, extra: &[&str]) {
    let with = |args: &[&str]| -> Vec<String> { args.iter().chain(extra).map(|s| s.to_string()).collect() };
    let run = |args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(dir, &refs);
    };
    run(with(&["gen", "--manifold", "sphere:6", "--scenario", "classes:c=3,per=4,len=24,style=0.2", "--seed", "5", "--out", "data.json"]));
    run(with(&["gen", "--manifold", "grassmann:6:2", "--scenario", "concat:classes=3,reps=4,len=20", "--seed", "5", "--out", "concat.json"]));
    run(with(&["train", "--in", "data.json", "--method", "kmeans", "--k", "8", "--seed", "5", "--out", "km.json"]));
    run(with(&["train", "--in", "data.json", "--method", "conscience", "--k", "8", "--passes", "4", "--seed", "5", "--out", "cs.json"]));
    run(with(&["train", "--in", "data.json", "--method", "hybrid", "--stage1-k", "3", "--r", "1", "--passes", "3", "--seed", "5", "--out", "hy.json"]));
    run(with(&["encode", "--in", "data.json", "--codebook", "km.json", "--window", "2", "--out", "enc.json", "--text-out", "enc.txt"]));
    run(with(&["train", "--in", "concat.json", "--method", "kmeans", "--k", "6", "--seed", "5", "--out", "ckm.json"]));
    run(with(&["encode", "--in", "concat.json", "--codebook", "ckm.json", "--window", "5", "--out", "cenc.json"]));
    run(with(&["discover", "--in", "cenc.json", "--codebook", "ckm.json", "--len", "4", "--top", "3", "--out", "motifs.json"]));
}

const ARTIFACTS: [&str; 10] = [
    "data.json", "concat.json", "km.json", "cs.json", "hy.json", "enc.json", "enc.txt", "ckm.json", "cenc.json", "motifs.json",
];

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    produce(a.path(), &[]);
    produce(b.path(), &[]);
    produce(c.path(), &["--sequential"]);
    for name in ARTIFACTS {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name} differs between runs");
        assert_eq!(x, std::fs::read(c.path().join(name)).unwrap(), "{name} differs under --sequential");
    }
}

#[test]
fn pipeline_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    produce(dir, &[]);

    let text = std::fs::read_to_string(dir.join("enc.txt")).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().all(|l| l.split('\t').nth(1).is_some_and(|s| s.len() == 12)));

    let m = ok(dir, &["match", "--a", "enc.json", "--b", "enc.json", "--codebook", "km.json"]);
    assert_eq!(m["distance"], 0.0);
    let m = ok(dir, &["match", "--a", "enc.json", "--b", "enc.json", "--b-id", "c2_e1", "--codebook", "km.json", "--dtw"]);
    assert_eq!(m["metric"], "dtw");
    assert!(m["distance"].as_f64().unwrap() > 0.0);

    let knn = ok(dir, &["knn", "--query", "enc.json", "--db", "enc.json", "--codebook", "km.json", "--k", "3"]);
    let first = &knn[0]["neighbors"];
    assert_eq!(first.as_array().unwrap().len(), 3);
    assert_eq!(first[0]["id"], "c0_e0");

    let loo = ok(dir, &["classify", "--db", "enc.json", "--codebook", "km.json", "--loo"]);
    assert_eq!(loo["predictions"].as_array().unwrap().len(), 12);
    assert!(loo["accuracy"].as_f64().unwrap() >= 0.5);
    let test = ok(dir, &["classify", "--db", "enc.json", "--test", "enc.json", "--codebook", "km.json"]);
    assert_eq!(test["accuracy"], 1.0);

    let h = ok(dir, &["entropy", "--labels-from", "data.json", "--codebook", "cs.json"]);
    let counts: u64 = h["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 12 * 24);
    assert!(h["entropy_bits"].as_f64().unwrap() <= 3.0 + 1e-12);

    let motifs = ok(dir, &["discover", "--in", "cenc.json", "--len", "4", "--radius", "1.5", "--top", "2"]);
    assert_eq!(motifs["notes"]["table"], "mismatch");
    assert!(motifs["motifs"].as_array().unwrap().len() <= 2);

    let report = ok(dir, &["bench", "--suite", "tradeoff", "--smoke", "--reps", "3", "--out", "bench.json"]);
    assert_eq!(report["suite"], "tradeoff");
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("bench.json")).unwrap()).unwrap();
    assert_eq!(file["kind"], "bench_report");
    assert!(!file["payload"]["tradeoff"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    produce(dir, &[]);

    assert_eq!(code(dir, &["train", "--in", "data.json", "--method", "kmeans", "--k", "1000", "--out", "x.json"]), 1);
    assert_eq!(code(dir, &["train", "--in", "data.json", "--method", "kmeans", "--out", "x.json"]), 1);
    assert_eq!(code(dir, &["no-such-command"]), 1);
    assert_eq!(code(dir, &["gen", "--manifold", "torus:3", "--scenario", "clusters", "--out", "x.json"]), 1);
    assert_eq!(code(dir, &["discover", "--in", "cenc.json", "--len", "4", "--radius", "wide"]), 1);

    assert_eq!(code(dir, &["match", "--a", "enc.json", "--b", "enc.json", "--codebook", "cs.json"]), 2);
    assert_eq!(code(dir, &["entropy", "--labels-from", "concat.json", "--codebook", "km.json"]), 2);
    assert_eq!(code(dir, &["encode", "--in", "km.json", "--codebook", "km.json", "--out", "x.json"]), 2);
    let future = std::fs::read_to_string(dir.join("km.json")).unwrap().replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    std::fs::write(dir.join("future.json"), future).unwrap();
    assert_eq!(code(dir, &["match", "--a", "enc.json", "--b", "enc.json", "--codebook", "future.json"]), 2);

    assert_eq!(code(dir, &["encode", "--in", "missing.json", "--codebook", "km.json", "--out", "x.json"]), 3);
    assert_eq!(code(dir, &["gen", "--manifold", "sphere:3", "--scenario", "clusters", "--out", "no/such/dir/x.json"]), 3);
    assert_eq!(code(dir, &["--help"]), 0);
}
