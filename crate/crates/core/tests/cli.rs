use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fss-cohorts");

fn run(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn synth(dir: &Path) {
    let out = run(
        &[
            "synth",
            "--out",
            "data",
            "--n-researchers",
            "1500",
            "--seed",
            "11",
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn cardinalities(path: &Path) -> Vec<u64> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["regions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["cardinality"].as_u64().unwrap())
        .collect()
}

#[test]
fn synth_defaults_produce_full_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    assert!(dir.join("data/params.json").exists());
    let out = run(&["run", "--data", "data", "--out", "out"], dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "scores.csv",
        "cohorts.csv",
        "fields.csv",
        "ts_longevity.csv",
        "un_longevity.csv",
        "ts_mu2_longevity.csv",
        "ts_concentration.csv",
        "un_concentration.csv",
        "ts_euler.json",
        "un_euler.json",
        "career.csv",
        "mobility.csv",
        "mobility_flows.csv",
        "report.json",
    ] {
        assert!(dir.join("out").join(name).exists(), "missing {name}");
    }
    for euler in ["ts_euler.json", "un_euler.json", "ts_mu2_euler.json"] {
        let [a, ab, ac, abc] = cardinalities(&dir.join("out").join(euler))[..] else {
            panic!("four regions expected");
        };
        assert!(
            abc <= ab && ab <= a && abc <= ac && ac <= a,
            "{euler}: {a} {ab} {ac} {abc}"
        );
        assert!(a > 0);
    }
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    assert!(run(
        &["run", "--data", "data", "--out", "one", "--threads", "1"],
        dir
    )
    .status
    .success());
    assert!(run(
        &["run", "--data", "data", "--out", "many", "--threads", "4"],
        dir
    )
    .status
    .success());
    let names: Vec<_> = fs::read_dir(dir.join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(!names.is_empty());
    for name in names {
        let a = fs::read(dir.join("one").join(&name)).unwrap();
        let b = fs::read(dir.join("many").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn synth_is_byte_identical_for_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for out in ["x", "y"] {
        assert!(run(
            &[
                "synth",
                "--out",
                out,
                "--n-researchers",
                "300",
                "--seed",
                "5"
            ],
            dir
        )
        .status
        .success());
    }
    for f in [
        "roster.csv",
        "publications.csv",
        "authorships.csv",
        "params.json",
    ] {
        assert_eq!(
            fs::read(dir.join("x").join(f)).unwrap(),
            fs::read(dir.join("y").join(f)).unwrap()
        );
    }
}

#[test]
fn overlapping_periods_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let out = run(
        &[
            "run",
            "--data",
            "data",
            "--out",
            "out",
            "--periods",
            "A=2001-2004,B=2004-2008,C=2009-2012",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overlap"));
    assert!(!dir.join("out").exists());
}

#[test]
fn missing_input_exits_with_io_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["score", "--data", "nowhere", "--out", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn ingest_check_reports_clean_synthetic_data() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let out = run(&["ingest-check", "--data", "data"], dir);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("dataset is clean"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    fs::write(dir.join("run.toml"), "top_share = 0.2\ncss = false\n[inputs]\nroster = \"data/roster.csv\"\npublications = \"data/publications.csv\"\nauthorships = \"data/authorships.csv\"\n").unwrap();
    let out = run(
        &[
            "longevity",
            "--config",
            "run.toml",
            "--top-share",
            "0.1",
            "--out",
            "out",
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!dir.join("out/ts_mu2_euler.json").exists());
    let fields = fs::read_to_string(dir.join("out/fields.csv")).unwrap();
    let second = fields.lines().nth(1).unwrap();
    assert_eq!(second.split(',').nth(3), Some("90"));
}
