use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparsehw_cli::config::{parse, Overrides};

const MINIMAL: &str = "[experiment]\nn = 40\np = 3\nq = 2\nalpha = 0.05\nseed = 9\n";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sparsehw"));
    cmd.env_remove("SPARSEHW_SEED");
    cmd
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(config).arg("--out").arg(out).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_config_fills_defaults_and_writes_resolved_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let o = run(&config, &out, &["norms"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = fs::read_to_string(out.join("resolved-config.toml")).unwrap();
    for expected in ["kind = \"complete\"", "reps = 1000", "seed = 9", "points = 25", "C = 1.0", "sizes = [40]"] {
        assert!(resolved.contains(expected), "missing {expected} in\n{resolved}");
    }
    // The resolved file is itself a valid config describing the same run.
    let again = parse(&resolved, dir.path(), &Overrides::default(), None).unwrap();
    assert_eq!(again.seed, 9);
}

#[test]
fn alpha_out_of_range_names_key_line_and_constraint() {
    let text = MINIMAL.replace("alpha = 0.05", "alpha = 1.5");
    let err = parse(&text, Path::new("."), &Overrides::default(), None).unwrap_err();
    assert_eq!(err.key, "experiment.alpha");
    assert_eq!(err.line, Some(5));
    let msg = err.to_string();
    assert!(msg.contains("alpha") && msg.contains("(0,1)") && msg.contains("line 5"), "{msg}");

    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &text);
    let o = run(&config, &dir.path().join("out"), &["norms"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("experiment.alpha"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn frechet_violation_names_the_cell() {
    let text = "[experiment]\nkind = \"missing\"\nn = 30\np = 2\nq = 2\nseed = 1\n\n[missing]\npi_x = [0.5, 0.6]\npi_y = [0.5, 0.7]\npi_xy = [[0.3, 0.3], [0.3, 0.65]]\n";
    let err = parse(text, Path::new("."), &Overrides::default(), None).unwrap_err();
    assert_eq!(err.key, "missing.pi_xy");
    assert_eq!(err.line, Some(11));
    assert!(err.to_string().contains("(1, 1)"), "{err}");
}

#[test]
fn unknown_keys_and_syntax_errors_report_lines() {
    let err = parse(&format!("{MINIMAL}bogus = 3\n"), Path::new("."), &Overrides::default(), None)
        .unwrap_err();
    assert_eq!(err.line, Some(7));
    assert!(err.constraint.contains("bogus"), "{err}");
    let err = parse("[experiment]\nn = \n", Path::new("."), &Overrides::default(), None).unwrap_err();
    assert_eq!(err.line, Some(2));
}

#[test]
fn seed_priority_is_flag_then_env_then_file() {
    let o = Overrides { seed: Some(1), ..Default::default() };
    assert_eq!(parse(MINIMAL, Path::new("."), &o, Some("2")).unwrap().seed, 1);
    let none = Overrides::default();
    assert_eq!(parse(MINIMAL, Path::new("."), &none, Some("2")).unwrap().seed, 2);
    assert_eq!(parse(MINIMAL, Path::new("."), &none, None).unwrap().seed, 9);
    let unseeded = MINIMAL.replace("seed = 9\n", "");
    assert!(parse(&unseeded, Path::new("."), &none, None).is_err());
    assert!(parse(MINIMAL, Path::new("."), &none, Some("abc")).is_err());

    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("env");
    let o = bin()
        .env("SPARSEHW_SEED", "77")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("norms")
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(csv.starts_with("# seed=77 config_sha256="), "{csv}");
}

#[test]
fn norms_table_has_centering_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("{MINIMAL}\n[norms]\nsizes = [5]\n"));
    let out = dir.path().join("out");
    assert!(run(&config, &out, &["norms"]).status.success());
    let csv = fs::read_to_string(out.join("norms.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("centering,5,")).unwrap();
    let fields: Vec<f64> = row.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
    assert!((fields[0] - 0.5).abs() < 1e-15);
    assert!((fields[1] - 0.25).abs() < 1e-15);
}

#[test]
fn tail_rerun_is_byte_identical_and_bound_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}\n[population]\nsignals = [{{ k = 0, l = 0, value = 0.4 }}]\n\n[constants]\ncalibrate = true\n");
    let config = write_config(dir.path(), &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&config, &a, &["tail"]).status.success());
    assert!(run(&config, &b, &["--workers", "3", "tail"]).status.success());
    let csv = fs::read(a.join("tail.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("tail.csv")).unwrap());

    let text = String::from_utf8(csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 25);
    for w in rows.windows(2) {
        assert!(w[1][3] <= w[0][3]);
    }
    assert!(rows.iter().all(|r| r[1] <= r[3]));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("tail.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["passed"], true);
}

#[test]
fn different_seed_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&config, &a, &["tail"]).status.success());
    assert!(run(&config, &b, &["--seed", "10", "tail"]).status.success());
    assert_ne!(fs::read(a.join("tail.csv")).unwrap(), fs::read(b.join("tail.csv")).unwrap());
}

#[test]
fn failed_check_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // An absurd exponent constant makes the bound far too small.
    let config = write_config(dir.path(), &format!("{MINIMAL}\n[constants]\nc = 1000.0\n"));
    let out = dir.path().join("out");
    let o = run(&config, &out, &["tail"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("tail.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], false);
}

#[test]
fn module_errors_leave_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // Every cross-covariance is nonzero, so the FWER is undefined.
    let text = "[experiment]\nn = 30\np = 1\nq = 1\nseed = 1\nreps = 50\n\n[population]\nsignals = [{ k = 0, l = 0, value = 0.3 }]\n";
    let config = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let o = run(&config, &out, &["fwer"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("null set is empty"), "{}", stderr(&o));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn calibrate_writes_constants_that_fwer_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let base = format!("{MINIMAL}reps = 600\n\n[population]\nsignals = [{{ k = 1, l = 1, value = 0.8 }}]\n");
    let config = write_config(dir.path(), &base);
    let cal = dir.path().join("cal");
    let o = run(&config, &cal, &["calibrate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let constants = fs::read_to_string(cal.join("constants.toml")).unwrap();
    assert!(constants.contains("seed = 9") && constants.contains("config_sha256"));

    let with_file = format!("{base}\n[constants]\nfile = \"cal/constants.toml\"\n");
    let config = write_config(dir.path(), &with_file);
    let out = dir.path().join("fwer");
    let o = run(&config, &out, &["--seed", "10", "fwer"]);
    assert!(o.status.code().is_some_and(|c| c <= 1), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("fwer.json")).unwrap()).unwrap();
    let file: toml::Table = constants.parse().unwrap();
    assert_eq!(summary["constant"].as_f64(), file["C"].as_float());

    let missing = format!("{base}\n[constants]\nfile = \"nope.toml\"\n");
    let config = write_config(dir.path(), &missing);
    let o = run(&config, &dir.path().join("x"), &["fwer"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("constants.file"), "{}", stderr(&o));
}

#[test]
fn check_mgf_reports_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}\n[check_mgf]\nreps = 10000\na = [1.0, -0.5]\nlambda_fractions = [-0.5, 0.5]\n");
    let config = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = run(&config, &out, &["check-mgf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("mgf.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 4);
    assert!(out.join("hoeffding.csv").exists());
}

#[test]
fn shipped_example_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            sparsehw_cli::config::load(&path, &Overrides::default())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 4);
}
