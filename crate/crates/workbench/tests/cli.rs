use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
}

fn metrics() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../metrics")
}

fn run(args: &[&str], out: &Path) -> Output {
    let o = bin().args(args).arg("--out").arg(out).env_remove("LIOUVILLE_CACHE_DIR").output().unwrap();
    assert!(o.status.code().is_some(), "{o:?}");
    o
}

fn result_dir(o: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8(o.stdout.clone()).unwrap().trim())
}

#[test]
fn flat_length_spectrum_to_two_and_a_half() {
    let dir = tempfile::tempdir().unwrap();
    let flat = metrics().join("flat.json");
    let o = run(&["lspec", "--metric", flat.to_str().unwrap(), "--max-length", "2.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(result_dir(&o).join("lengths.csv")).unwrap();
    let mut lengths: Vec<f64> = r.records().map(|x| x.unwrap()[0].parse().unwrap()).collect();
    lengths.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    let want = [1.0, 2f64.sqrt(), 2.0, 5f64.sqrt()];
    for (a, b) in lengths.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert_eq!(lengths.len(), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(result_dir(&o).join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ncc"]["holds"], true);
}

#[test]
fn laplace_runs_are_reproducible_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let m = metrics().join("perturbed.json");
    let args = ["laplace", "--metric", m.to_str().unwrap(), "--count", "30", "--grid", "32"];
    let a = run(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&a.stderr).contains("stored"));
    let first = fs::read_to_string(result_dir(&a).join("eigenvalues.csv")).unwrap();
    let b = run(&args, dir.path());
    assert!(String::from_utf8_lossy(&b.stderr).contains("hit"));
    assert_eq!(result_dir(&a), result_dir(&b));
    assert_eq!(first, fs::read_to_string(result_dir(&b).join("eigenvalues.csv")).unwrap());

    // A fresh solve gives the same bytes as the cached one.
    let other = tempfile::tempdir().unwrap();
    let c = run(&args, other.path());
    assert!(String::from_utf8_lossy(&c.stderr).contains("stored"));
    assert_eq!(first, fs::read_to_string(result_dir(&c).join("eigenvalues.csv")).unwrap());
}

#[test]
fn job_files_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    let flat = metrics().join("flat.json");
    fs::write(
        &job,
        serde_json::json!({ "command": "lspec", "metric": flat, "params": { "max_length": 2.0 } }).to_string(),
    )
    .unwrap();
    let a = run(&["lspec", "--config", job.to_str().unwrap()], dir.path());
    let b = run(&["lspec", "--metric", flat.to_str().unwrap(), "--max-length", "2"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(result_dir(&a), result_dir(&b));
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"f1\": { \"cos\": [0.0, 1.5] }\n}\n").unwrap();
    let o = run(&["laplace", "--metric", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");

    let m = metrics().join("perturbed.json");
    let o = run(
        &["laplace", "--metric", m.to_str().unwrap(), "--count", "20", "--grid", "32", "--residual-tolerance", "1e-30"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["lspec", "--metric", dir.path().join("missing.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
