use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jacobi_lattice::io::read_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jacobi-lattice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full = vec!["--out", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    run(&full)
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# schema=1 "), "{} lacks schema line", path.display());
    read_csv(&text).unwrap()
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn spectrum_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--set", "lambda_samples=21", "--set", "table_xmax=8", "spectrum"];
    assert_eq!(run_in(a.path(), &args).status.code(), Some(0));
    assert_eq!(run_in(b.path(), &args).status.code(), Some(0));
    for f in ["g_table.csv", "phi.csv", "xi.csv", "phi_perturbed.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
        csv(&a.path().join(f));
    }
}

#[test]
fn free_spectrum_weight_is_plain_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--q", "0", "--set", "lambda_samples=15", "spectrum"]);
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv(&dir.path().join("g_table.csv"));
    let (il, ig, iw) = (column(&h, "lambda"), column(&h, "g"), column(&h, "w_l"));
    assert_eq!(rows.len(), 15);
    for r in &rows {
        assert_eq!(r[ig], 1.0);
        assert!((r[iw] - (-r[il]).exp()).abs() <= 1e-15 * r[iw].max(1e-300));
    }
    assert!(!dir.path().join("phi_perturbed.csv").exists());
}

#[test]
fn threshold_column_tends_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["--set", "lambda_min=1e-8", "--set", "lambda_max=1e-2", "--set", "lambda_samples=7", "spectrum"],
    );
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv(&dir.path().join("g_table.csv"));
    let i = column(&h, "g_log2");
    let dev: Vec<f64> = rows.iter().map(|r| (r[i] - 1.0).abs()).collect();
    // slow logarithmic approach; only the trend near zero is asserted
    assert!(dev[0] < dev[2] && dev[0] < 0.2, "{dev:?}");
}

#[test]
fn json_report_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--q", "2", "--seed", "7", "--set", "lambda_samples=5", "spectrum"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("spectrum.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "spectrum");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["q"], 2.0);
    assert_eq!(v["config"]["seed"], 7);
    assert!(v["report"].is_object());
}

#[test]
fn config_file_is_overridden_by_flags_and_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nq = 0.5\nseed = 3\nlambda_samples = 9\n\nkappa = 3\n").unwrap();
    let out = run_in(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "--seed", "4", "--set", "kappa=2.5", "spectrum"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["q"], 0.5);
    assert_eq!(v["config"]["seed"], 4);
    assert_eq!(v["config"]["kappa"], 2.5);
    assert_eq!(v["config"]["lambda_samples"], 9);
}

#[test]
fn boundstate_reports_energy_and_vector() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["boundstate"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("boundstate.json")).unwrap()).unwrap();
    let text = v["report"].to_string();
    assert!(text.contains("-0.43481820"), "{text}");
    let (_, rows) = csv(&dir.path().join("boundstate_vector.csv"));
    let norm: f64 = rows.iter().map(|r| r[1] * r[1]).sum();
    assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
    csv(&dir.path().join("boundstate_sweep.csv"));
}

#[test]
fn propagate_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--xmax", "3", "--set", "times=0,1,2", "--N", "200", "propagate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv(&dir.path().join("propagate_check.csv"));
    let i = column(&h, "oracle_diff");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[i] < 1e-6), "{rows:?}");
    csv(&dir.path().join("kernel.csv"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--q", "-1", "spectrum"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--set", "bogus=1", "spectrum"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--q", "0", "boundstate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_passes_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run_in(dir.path(), &["verify"]);
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(ok.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 15);
    assert!(dir.path().join("verify.json").exists());

    let bad = run_in(dir.path(), &["verify", "--corrupt-weight"]);
    assert_eq!(bad.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL completeness_free")), "{stdout}");
}
