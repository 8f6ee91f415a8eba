use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use binn::network::NetworkParams;
use binn_cli::commands::Metrics;

fn binn(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_binn"));
    c.args(args).env_remove("BINN_OUT_DIR");
    if let Some(p) = env_out {
        c.env("BINN_OUT_DIR", p);
    }
    c.output().expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn metrics(dir: &Path) -> Metrics {
    serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

#[test]
fn zero_iterations_writes_initial_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    ok(&binn(&["solve", "--problem", "hertz", "--iters", "0", "--out", out], None));
    let loss = fs::read_to_string(d.path().join("loss.csv")).unwrap();
    let lines: Vec<&str> = loss.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "iteration,loss");
    assert!(lines[1].starts_with("0,"));
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("metrics.json")).unwrap()).unwrap();
    let keys: Vec<&String> = raw.as_object().unwrap().keys().collect();
    for k in ["problem", "iterations", "final_loss", "boundary_rel_l2", "interior_rel_l2", "runtime_s"] {
        assert!(keys.iter().any(|x| *x == k), "missing {k}");
    }
    assert_eq!(keys.len(), 6);
    let m = metrics(d.path());
    assert_eq!((m.problem.as_str(), m.iterations), ("hertz", 0));
    assert!(m.boundary_rel_l2.unwrap() > 0.0);
    for f in ["boundary.csv", "interior.csv"] {
        let t = fs::read_to_string(d.path().join(f)).unwrap();
        assert!(t.starts_with("x1,x2,component,value,reference,abs_error\n"));
        assert!(t.lines().count() > 10);
    }
    // checkpoint round trip is bit-exact
    let text = fs::read_to_string(d.path().join("checkpoint.txt")).unwrap();
    let (p, it) = NetworkParams::from_checkpoint(&text).unwrap();
    assert_eq!(it, 0);
    assert_eq!(p.to_checkpoint(0), text);
}

#[test]
fn odd_quadrature_order_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = binn(&["solve", "--problem", "flower", "--ng", "7", "--out", d.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n_g") && err.contains("even"), "{err}");
    assert!(!d.path().join("metrics.json").exists());
}

#[test]
fn missing_problem_and_bad_config_exit_2() {
    assert_eq!(binn(&["solve"], None).status.code(), Some(2));
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"problem": "flower", "trian": {}}"#).unwrap();
    let o = binn(&["solve", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trian"));
    assert_eq!(binn(&["solve", "--problem", "plate"], None).status.code(), Some(2));
}

#[test]
fn output_dir_falls_back_to_env() {
    let d = tempfile::tempdir().unwrap();
    ok(&binn(&["solve", "--problem", "hertz", "--iters", "0"], Some(d.path())));
    assert!(d.path().join("metrics.json").exists());
    // --out wins over the environment
    let e = tempfile::tempdir().unwrap();
    ok(&binn(&["solve", "--problem", "hertz", "--iters", "0", "--out", e.path().to_str().unwrap()], Some(d.path())));
    assert!(e.path().join("metrics.json").exists());
}

#[test]
fn flags_override_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    let out = d.path().join("from-config");
    fs::write(
        &cfg,
        format!(r#"{{"problem": "beam", "train": {{"iterations": 3, "seed": 4}}, "output": {:?}}}"#, out.to_str().unwrap()),
    )
    .unwrap();
    ok(&binn(&["solve", "--config", cfg.to_str().unwrap(), "--problem", "hertz", "--iters", "2"], None));
    let m = metrics(&out);
    assert_eq!((m.problem.as_str(), m.iterations), ("hertz", 2));
    assert_eq!(fs::read_to_string(out.join("loss.csv")).unwrap().lines().count(), 4);
}

#[test]
fn artifacts_are_reproducible() {
    let run = |dir: &Path| {
        ok(&binn(&["solve", "--problem", "hertz", "--iters", "25", "--seed", "9", "--out", dir.to_str().unwrap()], None));
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    for f in ["loss.csv", "boundary.csv", "interior.csv", "checkpoint.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn eval_empty_flagged_and_mismatched_inputs() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path().to_str().unwrap();
    ok(&binn(&["solve", "--problem", "cylinder", "--iters", "0", "--out", dir], None));
    let ckpt = d.path().join("checkpoint.txt");
    let ck = ckpt.to_str().unwrap();

    let empty = d.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let e = tempfile::tempdir().unwrap();
    ok(&binn(&["eval", "--problem", "cylinder", "--checkpoint", ck, "--points", empty.to_str().unwrap(), "--out", e.path().to_str().unwrap()], None));
    let csv = fs::read_to_string(e.path().join("eval.csv")).unwrap();
    assert_eq!(csv, "x1,x2,component,value,reference,abs_error,margin_warning\n");

    let pts = d.path().join("pts.csv");
    fs::write(&pts, "x1,x2\n3,0\n1.51,0\n").unwrap();
    let o = binn(&["eval", "--problem", "cylinder", "--checkpoint", ck, "--points", pts.to_str().unwrap(), "--out", e.path().to_str().unwrap(), "--refine", "2"], None);
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let csv = fs::read_to_string(e.path().join("eval.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][6], "0");
    assert_eq!(rows[1][6], "1");
    assert!((rows[0][4].parse::<f64>().unwrap() - 2.25).abs() < 1e-12);

    // a scalar checkpoint cannot drive an elastic problem
    let o = binn(&["eval", "--problem", "beam", "--checkpoint", ck, "--points", pts.to_str().unwrap(), "--out", e.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let o = binn(&["eval", "--problem", "cylinder", "--checkpoint", "/nonexistent", "--points", pts.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inline_problem_with_linear_reference() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("square.json");
    // u = 1 + 2 x1 − x2 on the unit square: values on three sides, flux on the right
    let line = |a: [f64; 2], b: [f64; 2], bc: &str| {
        format!(r#"{{"curve": {{"line": {{"start": {a:?}, "end": {b:?}}}}}, "segments": 4, "bc": {bc}}}"#)
    };
    let dir = r#"{"type": "dirichlet", "value": [1, 0], "gradient": [[2, -1], [0, 0]]}"#;
    let neu = r#"{"type": "neumann", "normal": [[2, -1], [0, 0]]}"#;
    let pieces = [
        line([0.0, 0.0], [1.0, 0.0], dir),
        line([1.0, 0.0], [1.0, 1.0], neu),
        line([1.0, 1.0], [0.0, 1.0], dir),
        line([0.0, 1.0], [0.0, 0.0], dir),
    ]
    .join(",");
    fs::write(
        &cfg,
        format!(
            r#"{{"problem": {{"kind": "potential", "loops": [{{"kind": "outer", "pieces": [{pieces}]}}],
                 "exact": {{"value": [1, 0], "gradient": [[2, -1], [0, 0]]}}}},
               "train": {{"iterations": 300, "learning_rate": 0.01}}, "network": {{"width": 8}}}}"#
        ),
    )
    .unwrap();
    let out = d.path().join("out");
    ok(&binn(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None));
    let m = metrics(&out);
    assert_eq!(m.problem, "inline");
    let h: Vec<f64> = fs::read_to_string(out.join("loss.csv")).unwrap().lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(h.last().unwrap() < &(0.1 * h[0]), "{} -> {}", h[0], h.last().unwrap());
    assert!(m.boundary_rel_l2.unwrap().is_finite() && m.interior_rel_l2.unwrap().is_finite());
    let interior = fs::read_to_string(out.join("interior.csv")).unwrap();
    assert!(interior.lines().count() > 100);

    // without a reference the metrics are null and the reference cells empty
    let text = fs::read_to_string(&cfg).unwrap().replace(r#""exact": {"value": [1, 0], "gradient": [[2, -1], [0, 0]]}"#, r#""exact": null"#);
    fs::write(&cfg, text).unwrap();
    ok(&binn(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--iters", "0"], None));
    let raw = fs::read_to_string(out.join("metrics.json")).unwrap();
    assert!(raw.contains("\"boundary_rel_l2\": null"), "{raw}");
    let b = fs::read_to_string(out.join("boundary.csv")).unwrap();
    assert!(b.lines().nth(1).unwrap().ends_with(",,"));
}

#[test]
fn verify_passes_and_is_stable() {
    let a = binn(&["verify"], None);
    ok(&a);
    let b = binn(&["verify"], None);
    assert_eq!(a.stdout, b.stdout);
    let t = String::from_utf8_lossy(&a.stdout);
    assert!(t.contains("constant potential, flower") && !t.contains("FAIL"), "{t}");
}
