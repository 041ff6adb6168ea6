//! End-to-end CLI checks: artifacts on disk, byte-level reproducibility
//! across worker counts, and the documented exit codes.

use std::path::Path;
use std::process::Command;

fn latflow_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latflow"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_emits_reproducible_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dist = bernoulli(0.8, 1)\n\
         d = 2\n\
         rungs = 6:6, 8:8\n\
         replicates = 8\n\
         seed = 99\n\
         formats = jsonl,csv,svg\n",
    );
    let out1 = tmp.path().join("w1");
    let out8 = tmp.path().join("w8");
    for (out, workers) in [(&out1, "1"), (&out8, "8")] {
        let status = latflow_bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--workers", workers, "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let s1 = std::fs::read(out1.join("samples.jsonl")).unwrap();
    let s8 = std::fs::read(out8.join("samples.jsonl")).unwrap();
    assert_eq!(s1, s8, "samples must be byte-identical across worker counts");

    let csv = std::fs::read_to_string(out1.join("summary.csv")).unwrap();
    assert!(csv.starts_with(
        "rung_index,d,k,m,replicates,mean_ratio,sd_ratio,ci_low,ci_high,zero_fraction,mean_Nbar"
    ));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 99);
    assert_eq!(manifest["quantum_bits"], 20);
    assert!(out1.join("convergence.svg").exists());
    assert!(out1.join("cut.svg").exists());

    // plots can be re-rendered from the recorded samples
    let status = latflow_bin()
        .args(["plot", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out1)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn unknown_key_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dist = dirac(1)\nd = 2\nrungs = 4:4\nnope = 1\n");
    let output = latflow_bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown key"), "{stderr}");
}

#[test]
fn verify_small_budget_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dist = bernoulli(0.7, 1)\n\
         d = 2\n\
         rungs = 8:8\n\
         replicates = 1\n\
         seed = 3\n\
         t = 4\n\
         verify_realizations = 6\n",
    );
    let output = latflow_bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--workers", "4"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("exact-duality"), "{stdout}");
}

#[test]
fn tampering_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dist = bernoulli(0.7, 1)\n\
         d = 2\n\
         rungs = 8:8\n\
         replicates = 1\n\
         seed = 3\n\
         verify_realizations = 3\n\
         tamper = true\n",
    );
    let output = latflow_bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("exact-duality"), "{stderr}");
}

#[test]
fn empty_budget_is_a_warned_noop() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dist = dirac(1)\nd = 2\nrungs = 4:4\nverify_realizations = 0\n",
    );
    let output = latflow_bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("warning"), "{stdout}");
}
