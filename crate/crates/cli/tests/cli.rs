//! End-to-end behavior of the `convergence` binary.

use std::path::Path;

use assert_cmd::Command;

fn bin() -> Command {
    Command::cargo_bin("convergence").unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    bin()
        .args(["synth", "--out-dir"])
        .arg(dir)
        .args(["--seed", "1", "--per-stratum", "150"])
        .args(extra)
        .assert()
        .success();
}

fn input_args(dir: &Path) -> Vec<String> {
    [
        ("--corpus", "corpus.jsonl"),
        ("--countries", "countries.csv"),
        ("--field-map", "field_map.csv"),
        ("--vocabulary", "vocabulary.txt"),
        ("--vectors", "vectors.emb"),
    ]
    .iter()
    .flat_map(|(flag, file)| [flag.to_string(), dir.join(file).display().to_string()])
    .collect()
}

#[test]
fn help_and_version_exit_zero() {
    bin().arg("--help").assert().code(0);
    bin().arg("--version").assert().code(0);
}

#[test]
fn usage_errors_exit_one() {
    bin().arg("no-such-command").assert().code(1);
    bin().args(["run", "--threshold-fold", "3.5"]).assert().code(1);
    bin().args(["run", "--variant", "EU"]).assert().code(1);
    // No input paths configured.
    bin().arg("run").assert().code(1);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    std::fs::write(dir.path().join("vectors.emb"), b"NOPE").unwrap();
    bin()
        .arg("run")
        .args(input_args(dir.path()))
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .arg("--no-cache")
        .assert()
        .code(2);
}

#[test]
fn run_writes_a_verifiable_bundle() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    let out = dir.path().join("out");
    bin()
        .arg("run")
        .args(input_args(dir.path()))
        .arg("--out-dir")
        .arg(&out)
        .args(["--subsample", "all", "--subsample", "domestic_only", "--seed", "5"])
        .assert()
        .success();
    for f in ["manifest.json", "event_study.csv", "event_study.json", "panel.csv", "flags.csv", "coefficients/all.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest = convergence::driver::RunManifest::load(&out.join("manifest.json")).unwrap();
    assert!(manifest.verify(&out).unwrap().is_empty());
    assert_eq!(manifest.subsamples.len(), 2);
}

#[test]
fn staged_commands_match_the_full_run() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    let args = input_args(dir.path());
    let stage = dir.path().join("stage");
    let full = dir.path().join("full");
    let run = |sub: &str, out: &Path, extra: &[&str]| {
        bin().arg(sub).args(&args).arg("--out-dir").arg(out).arg("--no-cache").args(extra).assert().success();
    };
    run("run", &full, &[]);
    run("detect", &stage, &[]);
    let flags = stage.join("flags.csv");
    let flags = flags.to_str().unwrap();
    run("score", &stage, &["--flags", flags]);
    let scores = stage.join("scores.csv");
    run("panel", &stage, &["--flags", flags, "--scores", scores.to_str().unwrap()]);
    for f in ["markers.csv", "flags.csv", "scores.csv", "benchmarks.csv", "panel.csv"] {
        assert_eq!(std::fs::read(stage.join(f)).unwrap(), std::fs::read(full.join(f)).unwrap(), "{f}");
    }
    let panel = stage.join("panel.csv");
    run("fit", &stage, &["--panel", panel.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(stage.join("coefficients.csv")).unwrap(),
        std::fs::read(full.join("coefficients").join("all.csv")).unwrap()
    );
    let report = dir.path().join("report");
    run("report", &report, &["--panel", panel.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(report.join("event_study.csv")).unwrap(),
        std::fs::read(full.join("event_study.csv")).unwrap()
    );
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--panel-rows", "3000"]);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "countries = \"countries.csv\"\noutput_dir = \"fromfile\"\nreference_year = 2022\n").unwrap();
    let out = dir.path().join("override");
    let output = bin()
        .args(["fit", "--config"])
        .arg(&cfg)
        .arg("--panel")
        .arg(dir.path().join("panel.csv"))
        .arg("--out-dir")
        .arg(&out)
        .args(["--inference", "student_t"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.starts_with("term,estimate,se,t,p,ci_low,ci_high\ngenai,"));
    assert!(!dir.path().join("fromfile").exists());
    let fit = std::fs::read_to_string(out.join("fit.json")).unwrap();
    assert!(fit.contains("\"inference\": \"student_t\""), "{fit}");
}

#[test]
fn numeric_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--panel-rows", "2000"]);
    let cfg = dir.path().join("tight.toml");
    std::fs::write(&cfg, "max_iter = 1\ntol = 1e-14\n").unwrap();
    bin()
        .args(["fit", "--config"])
        .arg(&cfg)
        .arg("--panel")
        .arg(dir.path().join("panel.csv"))
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .assert()
        .code(3);
}
