use std::path::Path;
use std::process::{Command, Output};

fn mlop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlop"))
        .args(args)
        .output()
        .expect("failed to launch mlop")
}

fn ok(args: &[&str]) {
    let out = mlop(args);
    assert!(
        out.status.success(),
        "mlop {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn generate_denoise_approx_chain() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let den = dir.path().join("den");
    ok(&["generate", "--preset", "o2", "--noise", "0.1", "--seed", "3", "--out", s(&data)]);
    for f in ["points.csv", "values.csv", "params.csv", "manifest.json"] {
        assert!(data.join(f).exists(), "{f} missing");
    }
    assert_eq!(csv_rows(&data.join("points.csv")), 500);

    ok(&["denoise", "--in", s(&data), "--qsize", "30", "--iters", "5", "--out", s(&den)]);
    assert_eq!(csv_rows(&den.join("points.csv")), 30);
    assert_eq!(csv_rows(&den.join("values.csv")), 30);
    assert_eq!(csv_rows(&den.join("trace.csv")), 6);
    let header = std::fs::read_to_string(den.join("trace.csv")).unwrap();
    assert!(header.starts_with("iter,maxGradNorm,meanDisplacement,costEstimate"));

    let z = data.join("reference_points.csv");
    for model in ["phi1", "phi2", "phi3", "wavg"] {
        let out = dir.path().join(format!("{model}.csv"));
        ok(&["approx", "--model", model, "--centers", s(&den), "--points", s(&z), "--out", s(&out)]);
        assert_eq!(csv_rows(&out), 500);
    }

    let model = dir.path().join("model.json");
    let out = dir.path().join("again.csv");
    ok(&[
        "approx", "--model", "phi1", "--centers", s(&den), "--points", s(&z), "--out", s(&out), "--model-out",
        s(&model),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(doc["kernel"], "phi1");
    assert_eq!(doc["centers"].as_array().unwrap().len(), 30);
}

#[test]
fn sketched_denoise_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let den = dir.path().join("den");
    ok(&["generate", "--preset", "swiss", "--noise", "0.1", "--out", s(&data)]);
    ok(&[
        "denoise", "--in", s(&data), "--qsize", "40", "--iters", "3", "--sketch-dim", "8", "--out", s(&den),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(den.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cfg"]["useSketch"], true);
    assert_eq!(manifest["cfg"]["sketchDim"], 8);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["generate", "--preset", "cyl2", "--noise", "0.1", "--out", s(&data)]);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"eps": 0.1, "epsilon": 0.2}"#).unwrap();
    let out = mlop(&["denoise", "--in", s(&data), "--qsize", "10", "--config", s(&cfg), "--out", s(&dir.path().join("x"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    std::fs::write(&cfg, r#"{"scenario":"x","generator":{"kind":"swiss-roll","points":50,"ambient":5},"noise":{"domain":0.1,"codomain":0.1},"qSize":10,"maxIters":2,"extra":1}"#).unwrap();
    let out = mlop(&["experiment", "--config", s(&cfg), "--out", s(&dir.path().join("y"))]);
    assert!(!out.status.success());
}

#[test]
fn experiment_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"scenario":"tiny","generator":{"kind":"swiss-roll","points":80,"ambient":5},
            "noise":{"domain":0.05,"codomain":0.05},"qSize":20,"maxIters":3,"numNewPoints":10,"seed":4}"#,
    )
    .unwrap();
    let out = dir.path().join("exp");
    ok(&["experiment", "--config", s(&cfg), "--out", s(&out)]);
    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,evaluator,maxRelative,rmse,variance,denominator,seed"
    );
    let evaluators: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(evaluators.len(), 10);
    assert_eq!(evaluators[0], "values-q0");
    assert_eq!(evaluators[1], "values-qk");
    assert!(out.join("report.json").exists());
    assert!(out.join("plotdata").join("tiny_qk.csv").exists());
}

#[test]
fn missing_source_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!mlop(&["generate", "--out", s(dir.path())]).status.success());
    assert!(!mlop(&["experiment", "--out", s(dir.path())]).status.success());
    assert!(!mlop(&["experiment", "--preset", "nope", "--out", s(dir.path())]).status.success());
}

#[test]
fn experiment_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["experiment", "--preset", "o2-nonsmooth", "--seed", "7", "--out", s(out)]);
    }
    for f in ["results.csv", "report.json", "trace_o2-nonsmooth.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}
