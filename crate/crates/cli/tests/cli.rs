//! End-to-end runs of the binary with pinned seeds. Outputs are compared
//! byte-for-byte with `tests/golden/`; set `PMIPROF_BLESS=1` to rewrite them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const NORMAL: &str = r#"{"type": "mvn", "cov": [[1, 0.8], [0.8, 1]], "split": [1, 1]}"#;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn pmiprof(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmiprof"))
        .args(args)
        .current_dir(dir)
        .env_remove("PMIPROF_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = pmiprof(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn golden(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("PMIPROF_BLESS").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert!(
        expected == actual,
        "{name} differs from golden:\n{}",
        String::from_utf8_lossy(actual)
    );
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("normal.json"), NORMAL).unwrap();
    fs::copy(
        golden_dir().join("sample.csv"),
        dir.path().join("sample.csv"),
    )
    .unwrap();
    dir
}

#[test]
fn gaussian_mi_prints_four_decimals() {
    let dir = workspace();
    assert_eq!(
        ok(dir.path(), &["analytic", "gaussian-mi", "--rhos", "0.8"]),
        b"0.5108\n"
    );
    assert_eq!(
        ok(
            dir.path(),
            &["analytic", "gaussian-mi", "--dist", "normal.json"]
        ),
        b"0.5108\n"
    );
    let json = ok(
        dir.path(),
        &[
            "analytic",
            "gaussian-mi",
            "--rhos",
            "0.8,0.8",
            "--format",
            "json",
        ],
    );
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert!((v["mi"].as_f64().unwrap() - 1.0216512475319814).abs() < 1e-12);
}

#[test]
fn analytic_outputs() {
    let dir = workspace();
    golden(
        "gaussian_profile.csv",
        &ok(
            dir.path(),
            &[
                "analytic",
                "gaussian-profile",
                "--rhos",
                "0.3,0.8",
                "--n",
                "5",
                "--seed",
                "3",
            ],
        ),
    );
    golden(
        "variance_bounds.csv",
        &ok(
            dir.path(),
            &["analytic", "variance-bounds", "--mi", "0.5", "--m", "3"],
        ),
    );
    fs::write(dir.path().join("pmf.json"), "[[0.4, 0.1], [0.1, 0.4]]").unwrap();
    golden(
        "discrete_profile.csv",
        &ok(
            dir.path(),
            &["analytic", "discrete-profile", "--pmf", "pmf.json"],
        ),
    );
}

#[test]
fn sample_and_pmi() {
    let dir = workspace();
    golden(
        "sample.csv",
        &ok(
            dir.path(),
            &[
                "sample",
                "--dist",
                "normal.json",
                "--n",
                "200",
                "--seed",
                "7",
            ],
        ),
    );
    golden(
        "pmi.csv",
        &ok(
            dir.path(),
            &["pmi", "--dist", "normal.json", "--data", "sample.csv"],
        ),
    );
    let json = ok(
        dir.path(),
        &[
            "sample",
            "--dist",
            "normal.json",
            "--n",
            "2",
            "--format",
            "json",
        ],
    );
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&json).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["x1"].is_f64() && rows[0]["y1"].is_f64());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = workspace();
    let flag = ok(
        dir.path(),
        &["sample", "--dist", "normal.json", "--n", "4", "--seed", "9"],
    );
    let env = Command::new(env!("CARGO_BIN_EXE_pmiprof"))
        .args(["sample", "--dist", "normal.json", "--n", "4"])
        .current_dir(dir.path())
        .env("PMIPROF_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flag, env.stdout);
}

#[test]
fn profile_is_deterministic_and_stays_in_out_dir() {
    let dir = workspace();
    fs::create_dir(dir.path().join("a")).unwrap();
    fs::create_dir(dir.path().join("b")).unwrap();
    for sub in ["a", "b"] {
        let out = format!("{sub}/profile.csv");
        ok(
            dir.path(),
            &[
                "profile",
                "--dist",
                "normal.json",
                "--n",
                "1000",
                "--seed",
                "7",
                "--out",
                &out,
                "--histogram",
            ],
        );
    }
    let mut names: Vec<String> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "profile.csv",
            "profile.histogram.csv",
            "profile.manifest.json",
            "profile.summary.json"
        ]
    );
    let mut top: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["a", "b", "normal.json", "sample.csv"]);
    for name in [
        "profile.csv",
        "profile.histogram.csv",
        "profile.summary.json",
    ] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    golden(
        "profile.summary.json",
        &fs::read(dir.path().join("a/profile.summary.json")).unwrap(),
    );
    golden(
        "profile.histogram.csv",
        &fs::read(dir.path().join("a/profile.histogram.csv")).unwrap(),
    );

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/profile.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["root_seed"], 7);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["outputs"][0]["path"], "profile.csv");
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn estimate_every_method() {
    let dir = workspace();
    let mut all = Vec::new();
    for method in ["ksg", "hist", "cca", "dv", "nwj", "infonce", "mc"] {
        let out = ok(
            dir.path(),
            &[
                "estimate",
                "--method",
                method,
                "--data",
                "sample.csv",
                "--critic",
                "exact-pmi:normal.json",
                "--k",
                "5",
            ],
        );
        all.extend(out);
    }
    golden("estimate.csv", &all);
}

#[test]
fn benchmark_list_and_ground_truth() {
    let dir = workspace();
    let list = ok(dir.path(), &["benchmark", "list"]);
    assert_eq!(String::from_utf8(list.clone()).unwrap().lines().count(), 27);
    golden("benchmark_list.csv", &list);
    golden(
        "ground_truth.csv",
        &ok(
            dir.path(),
            &[
                "benchmark",
                "ground-truth",
                "--task",
                "waves",
                "--n",
                "5000",
            ],
        ),
    );
    // A manifest exported by `list --format json` round-trips.
    let manifest = ok(
        dir.path(),
        &["benchmark", "list", "--all", "--format", "json"],
    );
    fs::write(dir.path().join("tasks.json"), &manifest).unwrap();
    let again = ok(
        dir.path(),
        &[
            "benchmark",
            "list",
            "--manifest",
            "tasks.json",
            "--format",
            "json",
        ],
    );
    assert!(manifest == again, "manifest changed on reload");
}

#[test]
fn benchmark_run_has_one_row_per_seed_plus_summary() {
    let dir = workspace();
    let out = ok(
        dir.path(),
        &[
            "benchmark",
            "run",
            "--tasks",
            "X",
            "--estimators",
            "cca",
            "--n",
            "5000",
            "--seeds",
            "10",
            "--truth-samples",
            "5000",
        ],
    );
    let text = String::from_utf8(out.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("task,estimator,row,estimate,std"));
    assert!(lines[11].starts_with("X,cca,summary,"));
    golden("benchmark_run.csv", &out);
}

#[test]
fn bayes_posterior() {
    let dir = workspace();
    ok(
        dir.path(),
        &[
            "bayes",
            "--data",
            "sample.csv",
            "--k",
            "3",
            "--warmup",
            "30",
            "--draws",
            "10",
            "--mc-per-draw",
            "200",
            "--holdout",
            "0.25",
            "--ppc",
            "--out",
            "posterior.json",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("posterior.json")).unwrap()).unwrap();
    assert_eq!(report["draws"].as_array().unwrap().len(), 10);
    assert_eq!(report["mi"]["draws"].as_array().unwrap().len(), 10);
    assert_eq!(report["fitted_rows"], 150);
    assert_eq!(report["held_out_ks"].as_array().unwrap().len(), 2);
    golden(
        "posterior.json",
        &fs::read(dir.path().join("posterior.json")).unwrap(),
    );
    golden(
        "posterior.ppc.csv",
        &fs::read(dir.path().join("posterior.ppc.csv")).unwrap(),
    );
}

#[test]
fn noise_sweep_table() {
    let dir = workspace();
    golden(
        "noise_sweep.csv",
        &ok(
            dir.path(),
            &[
                "noise-sweep",
                "--kind",
                "alpha-inlier",
                "--grid",
                "0,0.25,0.5",
                "--estimators",
                "cca",
                "--n",
                "500",
                "--truth-samples",
                "2000",
            ],
        ),
    );
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let code = |args: &[&str]| pmiprof(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(
        code(&["estimate", "--method", "mine", "--data", "sample.csv"]),
        2
    );
    assert_eq!(
        code(&["estimate", "--method", "dv", "--data", "sample.csv"]),
        2
    );
    fs::write(
        dir.path().join("bad.json"),
        r#"{"type": "mvn", "split": [1, 1]}"#,
    )
    .unwrap();
    assert_eq!(code(&["sample", "--dist", "bad.json"]), 3);
    fs::write(
        dir.path().join("singular.json"),
        r#"{"type": "mvn", "cov": [[1, 1], [1, 1]], "split": [1, 1]}"#,
    )
    .unwrap();
    assert_eq!(code(&["sample", "--dist", "singular.json"]), 3);
    assert_eq!(code(&["benchmark", "ground-truth", "--task", "nope"]), 3);
    assert_eq!(
        code(&[
            "estimate",
            "--method",
            "ksg",
            "--k",
            "500",
            "--data",
            "sample.csv"
        ]),
        4
    );
    let out = pmiprof(dir.path(), &["analytic", "gaussian-mi", "--rhos", "1.5"]);
    assert_eq!(out.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "numeric");
}
