#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_traitleak"));
    c.env_remove("SOURCE_DATE_EPOCH").env("RUST_LOG", "error");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn dump_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/dump_20pages.xml")
}

/// Runs every command on a small synthetic corpus into `root/<step>`.
pub fn pipeline(root: &Path, seed: &str, threads: &str) {
    let d = |name: &str| root.join(name);
    let common = ["--seed", seed, "--threads", threads];
    let with = |args: &[&str]| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend_from_slice(&common);
        run_ok(&v);
    };
    let (synth, ingest, feat, train_dir, cohort_dir) = (d("synth"), d("ingest"), d("featurize"), d("train"), d("cohort"));
    with(&["synth", "--config", "exit_amplify", "--users", "300", "--out", s(&synth)]);
    let events = synth.join("events.csv");
    let labels = synth.join("labels.csv");
    with(&["ingest", "--events", s(&events), "--out", s(&ingest)]);
    with(&["ingest", "--dump", s(&dump_fixture()), "--grid-frames", "26", "--out", s(&d("ingest_dump"))]);
    let cache = ingest.join("events.bin");
    with(&["profile", "--events", s(&cache), "--labels", s(&labels), "--svg", "--out", s(&d("profile"))]);
    with(&["featurize", "--events", s(&cache), "--scheme", "extended", "--out", s(&feat)]);
    let features = feat.join("features.bin");
    let small = ["--repeats", "2", "--folds", "3"];
    let mut train = vec!["train-eval", "--features", s(&features), "--labels", s(&labels), "--class", "female"];
    train.extend_from_slice(&small);
    train.extend_from_slice(&["--out", s(&train_dir)]);
    with(&train);
    with(&["infodyn", "--features", s(&features), "--labels", s(&labels), "--out", s(&d("infodyn"))]);
    let mut cohort = vec!["cohort-eval", "--features", s(&features), "--labels", s(&labels), "--class", "female"];
    cohort.extend_from_slice(&small);
    cohort.extend_from_slice(&["--out", s(&cohort_dir)]);
    with(&cohort);
    let eval = d("train").join("eval.csv");
    with(&["report", "--input", s(&eval), "--x", "frame", "--y", "mean_auc,mean_epr", "--out", s(&d("report"))]);
}
