use std::path::Path;
use std::process::{Command, Output};

fn gribov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gribov")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn jacobi_and_sturm_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gribov(&["spectrum", "--mu", "1", "--lambda", "0.5", "--methods", "jacobi,sturm", "--k", "5", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&dir.path().join("jacobi.json"));
    assert_eq!(j["method"], "jacobi");
    assert_eq!(j["eigenvalues"].as_array().unwrap().len(), 5);
    assert!(j.get("wall_time").is_none());
    let c = json(&dir.path().join("comparison.json"));
    let pair = &c["pairs"][0];
    assert!(pair["max_rel_delta"].as_f64().unwrap() <= 1e-6);
    assert_eq!(pair["compared"], 5);
    assert_eq!(c["pass"], true);
}

#[test]
fn degenerate_spectrum_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gribov(&["spectrum", "--mu", "3", "--lambda", "0", "--methods", "jacobi", "--k", "6", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&dir.path().join("jacobi.json"));
    for (i, e) in j["eigenvalues"].as_array().unwrap().iter().enumerate() {
        assert_eq!(e["re"].as_f64().unwrap(), 3.0 * (i + 1) as f64);
        assert_eq!(e["im"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn reports_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = gribov(&["spectrum", "--mu", "1", "--lambda", "0.5", "--methods", "jacobi,shooting,kernel", "--trunc", "128", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["jacobi.json", "shooting.json", "kernel.json", "comparison.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // missing lambda, unknown method, bad tolerance: configuration errors
    assert_eq!(gribov(&["spectrum", "--mu", "1", "--out", out]).status.code(), Some(2));
    assert_eq!(gribov(&["spectrum", "--mu", "1", "--lambda", "1", "--methods", "qr", "--out", out]).status.code(), Some(2));
    assert_eq!(gribov(&["spectrum", "--mu", "1", "--lambda", "1", "--tol-eig", "-1", "--out", out]).status.code(), Some(2));
    // positivity-only methods reject lambda = 0
    let o = gribov(&["spectrum", "--mu", "1", "--lambda", "0", "--methods", "sturm", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let errs = json(&dir.path().join("errors.json"));
    assert_eq!(errs[0]["method"], "sturm");
    assert_eq!(errs[0]["kind"], "parameter");
    // an unattainable comparison tolerance is an invariant failure
    let o = gribov(&["spectrum", "--mu", "1", "--lambda", "0.5", "--methods", "jacobi,sturm", "--tol-compare", "1e-12", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        serde_json::json!({ "mu": 1.0, "lambda": -0.5, "k": 4, "methods": ["jacobi"], "trunc": 128, "out": out }).to_string(),
    )
    .unwrap();
    let o = gribov(&["spectrum", "--config", cfg.to_str().unwrap(), "--k", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("|lambda|"));
    let j = json(&out.join("jacobi.json"));
    assert_eq!(j["lambda"], 0.5);
    assert_eq!(j["eigenvalues"].as_array().unwrap().len(), 2);
    assert_eq!(j["trunc"]["N"], 128);
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = gribov(&["validate", "--mu", "1", "--lambda", "0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&dir.path().join("validate.json"));
    let names: Vec<&str> = v["invariants"].as_array().unwrap().iter().map(|x| x["name"].as_str().unwrap()).collect();
    for n in ["reality", "lower_bound", "biorthogonality", "completeness", "kernel_positivity"] {
        assert!(names.contains(&n), "{n}");
    }
    assert_eq!(v["pairs"].as_array().unwrap().len(), 6);
}

#[test]
fn csv_series_kernel_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gribov(&["spectrum", "--mu", "1", "--lambda", "0.5", "--methods", "sturm", "--format", "csv", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("sturm.csv")).unwrap();
    assert!(csv.starts_with("index,re,im,residual,converged\n"));
    assert_eq!(csv.lines().count(), 4);

    let o = gribov(&["series", "--mu", "1", "--lambda", "0.5", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("series.json"));
    assert!((s["sigma"].as_f64().unwrap() - 1.317707550332).abs() < 1e-8);
    assert!(std::fs::read_to_string(dir.path().join("ray_samples.csv")).unwrap().starts_with("y,u_re,u_im,up_re,up_im"));

    let o = gribov(&["kernel", "--mu", "1", "--lambda", "0.5", "--no-hs", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("kernel_matrix.csv").exists());

    gribov(&["spectrum", "--mu", "1", "--lambda", "0.5", "--methods", "jacobi", "--trunc", "256", "--out", out]);
    let o = gribov(&["report", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = json(&dir.path().join("comparison.json"));
    assert_eq!(c["pairs"][0]["a"], "jacobi");
    assert_eq!(c["pairs"][0]["b"], "kernel");
}
