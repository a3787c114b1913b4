use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gencoupling"));
    for var in ["GENCOUPLING_CONFIG", "GENCOUPLING_SEED", "GENCOUPLING_WORKERS", "GENCOUPLING_OUT"] {
        c.env_remove(var);
    }
    c
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    bin().arg("--config").arg(&path).arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const OU: &str = r#"
[model]
kind = "sde"
eigenvalues = [1.0]
sigma = [[1.0]]
x0 = [1.0]
y0 = [0.0]

[coupling]
control = "gain"
gain = 1.0
t_end = 1.0
dt = 1e-3
ensemble = 8
zeta = 4.0
kappa = 0.0

[seeds]
master_seed = 5
"#;

#[test]
fn ou_summary_reports_rate_four() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), OU, &["couple"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    let rate = s["q_decay"]["rate"].as_f64().unwrap();
    assert!((rate - 4.0).abs() <= 1e-3, "{rate}");
    assert_eq!(s["dissipativity"]["violations"], json!(0));
    assert_eq!(s["ensemble"], json!(8));
    let csv = fs::read_to_string(dir.path().join("out/runs/run_00000.csv")).unwrap();
    assert!(csv.starts_with("t,q,U_x,S_int,cost,ito_sum,logweight\n"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn runs_are_byte_identical_across_worker_counts() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(run(a.path(), OU, &["couple", "--workers", "1"]).status.success());
    assert!(run(b.path(), OU, &["couple", "--workers", "3"]).status.success());
    for i in 0..8 {
        let name = format!("out/runs/run_{i:05}.csv");
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name}");
    }
    assert_eq!(
        fs::read(a.path().join("out/summary.json")).unwrap(),
        fs::read(b.path().join("out/summary.json")).unwrap()
    );
}

#[test]
fn seed_override_from_environment() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(run(a.path(), OU, &["couple", "--seed", "99"]).status.success());
    let path = b.path().join("config.toml");
    fs::write(&path, OU).unwrap();
    let o = bin()
        .env("GENCOUPLING_CONFIG", &path)
        .env("GENCOUPLING_SEED", "99")
        .env("GENCOUPLING_OUT", b.path().join("out"))
        .arg("couple")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let name = "out/runs/run_00003.csv";
    assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    let s: Value = serde_json::from_str(&fs::read_to_string(b.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(s["master_seed"], json!(99));
}

#[test]
fn negative_dt_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &OU.replace("dt = 1e-3", "dt = -1e-3"), &["couple"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("coupling.dt must be > 0"), "{}", stderr(&o));
}

#[test]
fn all_validation_errors_are_listed() {
    let dir = TempDir::new().unwrap();
    let bad = OU.replace("dt = 1e-3", "dt = -1e-3").replace("ensemble = 8", "ensemble = 0");
    let o = run(dir.path(), &bad, &["couple"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("coupling.dt must be > 0") && err.contains("coupling.ensemble must be at least 1"), "{err}");
}

#[test]
fn unknown_key_reports_position() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &OU.replace("gain = 1.0", "gian = 1.0"), &["couple"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config.toml:11:1:"), "{}", stderr(&o));
}

#[test]
fn infeasible_certificate_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = "[certificate]\nconstants = { zeta = 1.0, kappa = 1.0, mu = 1.0, b = 2.0 }\n";
    let o = run(dir.path(), cfg, &["certify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ζ ≤ κb/μ"), "{}", stderr(&o));
}

#[test]
fn feasible_certificate_has_key_value_block() {
    let dir = TempDir::new().unwrap();
    let cfg = "[certificate]\nconstants = { zeta = 5.0, kappa = 1.0, mu = 1.0, b = 2.0 }\n";
    let o = run(dir.path(), cfg, &["certify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("[certificate]") && out.contains("lambda = 1.5") && out.contains("chi = 3.0"), "{out}");
    let c: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/certificate.json")).unwrap()).unwrap();
    assert_eq!(c["certificate"]["lambda"], json!(1.5));
}

#[test]
fn blow_up_exits_four() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &OU.replace("x0 = [1.0]", "x0 = [2e12]"), &["couple"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("blow-up"));
}

#[test]
fn missing_config_file_exits_five() {
    let o = bin().args(["--config", "/nonexistent/config.toml", "couple"]).output().unwrap();
    assert_eq!(o.status.code(), Some(5));
}

const NSE: &str = r#"
[model]
kind = "nse"
k_max = 4
nu = 1.0
control_shell = 1
noise = [
  { k = [1, 0], phase = "cos", amplitude = 0.1 },
  { k = [1, 0], phase = "sin", amplitude = 0.1 },
  { k = [0, 1], phase = "cos", amplitude = 0.1 },
  { k = [0, 1], phase = "sin", amplitude = 0.1 },
]
x0 = [{ k = [1, 1], phase = "cos", amplitude = 0.5 }]
y0 = []

[coupling]
control = "low-modes"
t_end = 0.05
dt = 1e-3
ensemble = 4
"#;

#[test]
fn nse_range_condition_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &NSE.replace("control_shell = 1", "control_shell = 2"), &["couple"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("model.noise: range condition H_N ⊂ Range(σ) fails"), "{err}");
}

#[test]
fn nse_report_lists_constants_and_threshold() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), NSE, &["couple"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(dir.path(), NSE, &["certify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bin().arg("report").arg(dir.path().join("out")).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    // λ_{N+1} = 2 after the |k|² = 1 shell; 4‖σ‖² = 0.16 < 2
    assert!(out.contains("zeta = 2, kappa = 4, lambda_(N+1) = 2, threshold holds"), "{out}");
    assert!(out.contains("[certify]") && out.contains("[couple]"), "{out}");
}

fn summary_fixture(ensemble: usize, empirical: f64) -> Value {
    let bound = |kind: &str, value: f64| json!({"kind": kind, "delta": null, "bound": {"value": value, "raw": value, "clamped": false, "kind": kind}});
    json!({
        "model": "sde", "control": "gain", "ensemble": ensemble, "t_end": 1.0, "dt": 0.001,
        "nse": null, "q_decay": {"rate": 4.0, "intercept": 0.0, "r2": 1.0}, "distance_decay": null,
        "dissipativity": null, "energy": null,
        "girsanov": {"kl": {"mean": 0.02, "std_err": 0.0, "n": 4}, "m_delta": []},
        "tv": {"empirical": empirical, "reference_size": 4, "bins": 10, "tolerance": 0.05,
               "bounds": [bound("pinsker", 0.1), bound("kl-exponential", 0.51)]}
    })
}

#[test]
fn report_flags_violated_pinsker_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("summary.json"), summary_fixture(4, 0.4).to_string()).unwrap();
    let o = bin().arg("report").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let flagged: Vec<&str> = out.lines().filter(|l| l.contains("VIOLATED")).collect();
    assert_eq!(flagged.len(), 1, "{out}");
    assert!(flagged[0].trim_start().starts_with("pinsker"), "{out}");
}

#[test]
fn report_rejects_empty_ensemble_and_empty_directory() {
    let dir = TempDir::new().unwrap();
    let o = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("no artifacts found"));
    fs::write(dir.path().join("summary.json"), summary_fixture(0, 0.0).to_string()).unwrap();
    let o = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty ensemble"), "{}", stderr(&o));
}

#[test]
fn bounds_command_evaluates_worked_values() {
    let dir = TempDir::new().unwrap();
    let cfg = "[bounds]\nkl = [0.0]\nn = [8.0]\ndelta = [0.5]\nm_delta = [0.1]\n";
    let o = run(dir.path(), cfg, &["bounds"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/bounds.json")).unwrap()).unwrap();
    let find = |kind: &str| {
        b["rows"].as_array().unwrap().iter().find(|r| r["bound"]["kind"] == json!(kind)).unwrap()["bound"]["value"]
            .as_f64()
            .unwrap()
    };
    assert!((find("kl-mass-transfer") - 1.0 / 12.0).abs() < 1e-15);
    assert!((find("fractional-moment") - 2f64.powf(1.0 / 3.0) * 0.1f64.powf(2.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn wasserstein_and_hitting_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = OU.to_string()
        + "\n[wasserstein]\nsamples = 32\nt = 0.5\ndt = 1e-2\n\n[hitting]\npoints = [[1.0], [3.0]]\nradius = 1.0\nt0 = 1.0\ndt = 1e-2\nn_traj = 50\n";
    let o = run(dir.path(), &cfg, &["wasserstein"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(dir.path(), &cfg, &["hitprob"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let w: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/wasserstein.json")).unwrap()).unwrap();
    let d = w["distance"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&d));
    let h: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/hitting.json")).unwrap()).unwrap();
    assert_eq!(h["report"]["per_point"].as_array().unwrap().len(), 2);
    let o = bin().arg("report").arg(dir.path().join("out")).output().unwrap();
    assert!(stdout(&o).contains("[wasserstein]") && stdout(&o).contains("[hitting]"));
}
