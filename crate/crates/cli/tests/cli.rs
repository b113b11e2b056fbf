use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nptcorr_cli::{run, ExperimentConfig};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nptcorr"));
    c.env_remove("NPTCORR_OUT_DIR");
    c
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run_cli(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn field(rec: &csv::StringRecord, k: usize) -> f64 {
    rec[k].parse().unwrap()
}

const SMALL_SCAN: &str = r#"
experiment = "green_retarded_scan"
name = "scan"

[grid]
t_prime = 0.0
t = [0.5, 1.0, 2.5]

[protocol]
shots = 400
seed = 7
"#;

#[test]
fn zero_shots_is_reported_on_shots() {
    let cfg = ExperimentConfig::from_toml(&SMALL_SCAN.replace("shots = 400", "shots = 0")).unwrap();
    let d = cfg.validate();
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].field, "protocol.shots");
}

#[test]
fn missing_seed_when_sampling() {
    let cfg = ExperimentConfig::from_toml(&SMALL_SCAN.replace("seed = 7", "")).unwrap();
    assert!(cfg.validate().iter().any(|d| d.field == "protocol.seed"));
    let exact = ExperimentConfig::from_toml(&SMALL_SCAN.replace("seed = 7", "exact = true")).unwrap();
    assert!(exact.validate().is_empty());
}

#[test]
fn non_increasing_grid_is_reported_on_times() {
    for grid in ["t = [0.5, 0.5, 1.0]", "t = [2.0, 1.0]", "t = []"] {
        let cfg = ExperimentConfig::from_toml(&SMALL_SCAN.replace("t = [0.5, 1.0, 2.5]", grid)).unwrap();
        let d = cfg.validate();
        assert!(d.iter().any(|x| x.field == "grid.t"), "{grid}: {d:?}");
    }
}

#[test]
fn validation_collects_every_problem() {
    let text = r#"
experiment = "three_point"
[model]
J = -1.0
[grid]
t_prime = 0.0
t = [1.0, 0.5]
[protocol]
shots = 0
ops = ["X", "Q"]
brackets = ["commutator"]
"#;
    let d = ExperimentConfig::from_toml(text).unwrap().validate();
    let fields: Vec<&str> = d.iter().map(|x| x.field.as_str()).collect();
    for f in ["model", "protocol.shots", "protocol.seed", "grid.t", "protocol.ops", "protocol.ops[1]", "protocol.brackets", "grid.t_mid"] {
        assert!(fields.contains(&f), "missing {f} in {fields:?}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ExperimentConfig::from_toml(&format!("{SMALL_SCAN}\nshotz = 3\n")).unwrap_err();
    assert!(err.to_string().contains("shotz"));
}

#[test]
fn shipped_configs_are_valid() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let p = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&p).unwrap();
        assert!(cfg.validate().is_empty(), "{}: {:?}", p.display(), cfg.validate());
    }
}

#[test]
fn validate_subcommand_exit_codes() {
    let ok = run_cli(&["validate", config_path("reference_exact.toml").to_str().unwrap()]);
    assert!(ok.status.success(), "{}", stderr(&ok));

    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), &SMALL_SCAN.replace("shots = 400", "shots = 0"));
    let bad = run_cli(&["validate", p.to_str().unwrap()]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("protocol.shots"), "{}", stderr(&bad));

    let p = write_config(dir.path(), &SMALL_SCAN.replace("shots = 400", "shots = 0"));
    let out = dir.path().join("never");
    let refused = run_cli(&["run", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!refused.status.success());
    assert!(!out.exists());
}

#[test]
fn reference_exact_rows_match_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(&["run", config_path("reference_exact.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&dir.path().join("reference_exact.csv"));
    assert_eq!(rows.len(), 39);
    assert_eq!(field(&rows[0], 0), 0.5);
    assert_eq!(field(&rows[38], 0), 19.5);
    for r in &rows {
        let err = (field(r, 2) - field(r, 6)).hypot(field(r, 3) - field(r, 7));
        assert!(err <= 1e-4, "t = {}: {err}", &r[0]);
        assert_eq!(&r[9], "exact");
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("reference_exact.json")).unwrap()).unwrap();
    assert_eq!(meta["conventions"]["phase_gate"], "S");
    assert_eq!(meta["conventions"]["coefficient_resolution"], "population_transfer");
}

#[test]
fn csv_header_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), SMALL_SCAN);
    let o = run_cli(&["run", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,t_prime,estimate_re,estimate_im,stderr_re,stderr_im,analytic_re,analytic_im,shots,method");
    for r in read_rows(&dir.path().join("scan.csv")) {
        assert!(field(&r, 4) > 0.0 && field(&r, 5) > 0.0);
        assert_eq!(&r[9], "conditional_subtraction");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), SMALL_SCAN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_cli(&["run", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "-q"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(a.join("scan.csv")).unwrap(), std::fs::read(b.join("scan.csv")).unwrap());
    let strip = |p: PathBuf| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timestamp_unix");
        v["config"]["output"]["dir"] = Value::Null;
        v.as_object_mut().unwrap().remove("config_toml");
        v.as_object_mut().unwrap().remove("config_hash");
        v
    };
    assert_eq!(strip(a.join("scan.json")), strip(b.join("scan.json")));

    let reseeded = dir.path().join("c");
    let o = run_cli(&["run", p.to_str().unwrap(), "--out", reseeded.to_str().unwrap(), "--seed", "8", "-q"]);
    assert!(o.status.success());
    assert_ne!(std::fs::read(a.join("scan.csv")).unwrap(), std::fs::read(reseeded.join("scan.csv")).unwrap());
}

#[test]
fn echo_reruns_to_the_same_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), SMALL_SCAN);
    let o = run_cli(&["run", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "99", "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan.json")).unwrap()).unwrap();
    let echo = meta["config_toml"].as_str().unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap(), nptcorr_cli::config_hash(echo));

    let cfg = ExperimentConfig::from_toml(echo).unwrap();
    assert_eq!(cfg.protocol.seed, Some(99));
    let again = run(&cfg).unwrap();
    let rows = read_rows(&dir.path().join("scan.csv"));
    let fresh = again.table.results().unwrap();
    assert_eq!(rows.len(), fresh.len());
    for (r, f) in rows.iter().zip(fresh) {
        assert_eq!(field(r, 2), f.estimate_re);
        assert_eq!(field(r, 3), f.estimate_im);
        assert_eq!(field(r, 4), f.stderr_re);
    }
}

#[test]
fn exact_override_drops_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), &SMALL_SCAN.replace("seed = 7", ""));
    let o = run_cli(&["run", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--exact", "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in read_rows(&dir.path().join("scan.csv")) {
        assert_eq!(&r[8], "0");
        assert_eq!(&r[9], "exact");
    }
}

#[test]
fn output_dir_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let cfg_dir = dir.path().join("from_config");
    let p = write_config(dir.path(), &SMALL_SCAN.replace("shots = 400", "exact = true"));
    let o = bin().args(["run", p.to_str().unwrap(), "-q"]).env("NPTCORR_OUT_DIR", &env_dir).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_dir.join("scan.csv").exists());

    let text = format!("{}\n[output]\ndir = {:?}\n", SMALL_SCAN.replace("shots = 400", "exact = true"), cfg_dir.to_str().unwrap());
    let p = write_config(dir.path(), &text);
    let o = bin().args(["run", p.to_str().unwrap(), "-q"]).env("NPTCORR_OUT_DIR", &env_dir).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(cfg_dir.join("scan.csv").exists());
}

#[test]
fn keldysh_table_lists_accessible_and_missing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(&["run", config_path("keldysh_n3.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("accessible (4): O1O2O3 O1O3O2 O2O3O1 O3O2O1"), "{stdout}");
    assert!(stdout.contains("missing (2): O2O1O3 O3O1O2"), "{stdout}");
    let rows = read_rows(&dir.path().join("keldysh_table.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| &r[2] == "true").count(), 4);
    assert!(rows.iter().filter(|r| &r[2] == "false").all(|r| &r[1] == "multi_branch" && r[3].is_empty()));
}

#[test]
fn convergence_ratios_near_two() {
    let cfg = ExperimentConfig::load(&config_path("convergence.toml")).unwrap();
    let out = run(&cfg).unwrap();
    let ratios: Vec<f64> = out.summary["ratios"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    for r in ratios {
        assert!((r - 2.0).abs() < 0.2, "ratio {r}");
    }
    let rows = out.table.results().unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0].method, "trotter_dt=0.02");
}

#[test]
fn bracket_scans_match_reference() {
    let cfg = ExperimentConfig::load(&config_path("three_point.toml")).unwrap();
    let out = run(&cfg).unwrap();
    let rows = out.table.results().unwrap();
    assert!(rows.iter().any(|r| r.analytic_re.hypot(r.analytic_im) > 1e-3));
    for r in rows {
        assert!((r.estimate_re - r.analytic_re).hypot(r.estimate_im - r.analytic_im) < 1e-9, "{r:?}");
    }

    let two = r#"
experiment = "two_point"
[grid]
t_prime = 0.5
t = [0.5, 1.0, 3.0]
[protocol]
shots = 4000
seed = 3
ops = ["Y", "X"]
brackets = ["commutator"]
"#;
    let out = run(&ExperimentConfig::from_toml(two).unwrap()).unwrap();
    for r in out.table.results().unwrap() {
        for (e, a, s) in [(r.estimate_re, r.analytic_re, r.stderr_re), (r.estimate_im, r.analytic_im, r.stderr_im)] {
            assert!((e - a).abs() <= 4.0 * s + 1e-12, "{r:?}");
        }
    }
}

#[test]
fn hadamard_compare_shows_dephasing_damage() {
    let cfg = ExperimentConfig::load(&config_path("hadamard_compare.toml")).unwrap();
    let out = run(&cfg).unwrap();
    let rows = out.table.results().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(out.summary["robust_max_abs_error"].as_f64().unwrap() < 1e-9);
    let ratio = |r: &nptcorr_cli::ResultRow| r.estimate_re.hypot(r.estimate_im) / r.analytic_re.hypot(r.analytic_im);
    for pair in rows.chunks(2) {
        assert!(pair[0].method.starts_with("robust:") && pair[1].method.starts_with("hadamard:"));
        let expected = (-0.3 * pair[1].t).exp();
        assert!((ratio(&pair[1]) - expected).abs() < 1e-9, "t = {}", pair[1].t);
    }
}
