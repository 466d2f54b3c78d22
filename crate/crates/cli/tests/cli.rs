use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn turtle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_turtle")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_into(dir: &Path, seed: &str) {
    let o = turtle(&[
        "synth",
        "--samples",
        "120",
        "--classes",
        "2",
        "--dims",
        "4,3",
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn spaces(dir: &Path) -> String {
    format!("{},{}", dir.join("view-0.emb").display(), dir.join("view-1.emb").display())
}

#[test]
fn help_exits_zero() {
    assert_eq!(turtle(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(turtle(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn train_without_classes_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "1");
    let o = turtle(&["train", "--spaces", &spaces(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--classes"));
    assert!(stderr(&o).contains("Usage: turtle train"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "1");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "classes = 2\nlearning-rate = 0.1\n").unwrap();
    let o = turtle(&["train", "--config", cfg.to_str().unwrap(), "--spaces", &spaces(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let o = turtle(&["train", "--spaces", "/does/not/exist.emb", "--classes", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_identical_labels() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.labels");
    fs::write(&p, "0\n1\n1\n2\n").unwrap();
    let csv = dir.path().join("c.csv");
    let o = turtle(&[
        "eval",
        "--pred",
        p.to_str().unwrap(),
        "--truth",
        p.to_str().unwrap(),
        "--contingency",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("accuracy: 1.000000"));
    assert_eq!(fs::read_to_string(csv).unwrap(), "1,0,0\n0,2,0\n0,0,1\n");
}

#[test]
fn synth_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_into(a.path(), "9");
    synth_into(b.path(), "9");
    for f in ["view-0.emb", "view-1.emb", "labels.txt", "split.txt", "synth.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn pipeline_is_deterministic() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), "3");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let run = tempfile::tempdir().unwrap();
        let o = turtle(&[
            "train",
            "--spaces",
            &spaces(data.path()),
            "--classes",
            "2",
            "--iters",
            "200",
            "--seed",
            "4",
            "--out",
            run.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let e = turtle(&[
            "eval",
            "--pred",
            run.path().join("labels.txt").to_str().unwrap(),
            "--truth",
            data.path().join("labels.txt").to_str().unwrap(),
        ]);
        assert!(e.status.success());
        outputs.push((
            fs::read(run.path().join("labels.txt")).unwrap(),
            fs::read(run.path().join("soft_labels.emb")).unwrap(),
            fs::read(run.path().join("trace.csv")).unwrap(),
            stdout(&e),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_file_and_flags_are_echoed() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), "2");
    let run = tempfile::tempdir().unwrap();
    let cfg = data.path().join("run.cfg");
    fs::write(&cfg, format!("classes = 2\niters = 50\ngamma = 3\nspaces = {}\n", spaces(data.path()))).unwrap();
    let o = turtle(&["train", "--config", cfg.to_str().unwrap(), "--gamma", "4", "--out", run.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(run.path().join("report.txt")).unwrap();
    assert!(report.contains("config.gamma: 4\n"), "{report}");
    assert!(report.contains("config.iters: 50\n"));
    assert!(report.contains("config.spaces: "));
    assert_eq!(fs::read_to_string(run.path().join("trace.csv")).unwrap().lines().count(), 51);
}

#[test]
fn grid_then_select() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), "5");
    let grid = tempfile::tempdir().unwrap();
    let o = turtle(&[
        "grid",
        "--spaces",
        &spaces(data.path()),
        "--classes",
        "2",
        "--iters",
        "100",
        "--outer-lrs",
        "1e-3,1e-4",
        "--inner-lrs",
        "1e-2",
        "--warm-starts",
        "true",
        "--out",
        grid.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(grid.path().join("run-001/report.txt").exists());
    let s = turtle(&["select", "--spaces", &spaces(data.path()), "--grid", grid.path().to_str().unwrap()]);
    assert!(s.status.success(), "{}", stderr(&s));
    let out = stdout(&s);
    assert!(out.contains("selected run-00"), "{out}");
    assert!(out.contains("cv-score="));
    assert!(grid.path().join("selection.txt").exists());
}

#[test]
fn kmeans_and_probe_on_synthetic_data() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), "6");
    let km = data.path().join("km.labels");
    let o = turtle(&["kmeans", "--spaces", &spaces(data.path()), "--classes", "2", "--out", km.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = turtle(&[
        "eval",
        "--pred",
        km.to_str().unwrap(),
        "--truth",
        data.path().join("labels.txt").to_str().unwrap(),
    ]);
    assert!(stdout(&e).contains("accuracy: 1.000000"), "{}", stdout(&e));
    let p = turtle(&[
        "probe",
        "--space",
        data.path().join("view-0.emb").to_str().unwrap(),
        "--labels",
        data.path().join("labels.txt").to_str().unwrap(),
        "--split",
        data.path().join("split.txt").to_str().unwrap(),
    ]);
    assert!(p.status.success(), "{}", stderr(&p));
    assert!(stdout(&p).contains("accuracy: "));
}

#[test]
fn bench_margin_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bound.csv");
    let o = turtle(&["bench-margin", "--thetas", "3", "--steps", "10000", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta_id,lhs,rhs,residual,holds");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
    let bad = turtle(&["bench-margin", "--steps", "10"]);
    assert_eq!(bad.status.code(), Some(1));
}
