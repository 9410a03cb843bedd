use std::path::Path;
use std::process::{Command, Output};

use levy_avg::io::CsvTable;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-avg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("LEVY_AVG_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SCHAUDER: &str = r#"
kind = "schauder_sweep"

[schauder]
alpha = 1.5
etas = [0.0, 0.75]
lambdas = [0.0, 1.0, 4.0, 16.0]
grid_points = 64
forcing = "cos(x) + cos(4*x)"
dt = 0.01
"#;

const STRONG: &str = r#"
kind = "strong_rate"
master_seed = 11
n_paths = 120
epsilon_list = [0.25, 0.125, 0.0625, 0.03125]

[grid]
steps_per_epsilon = 20

[system]
alpha = 1.5
x0 = [0.3]
drift = ["cos(t)*(1 + 0.5*sin(x))"]
averaged_drift = ["0"]
beta = 0.99
period = 6.283185307179586
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn regions_and_rate_calc() {
    let o = run(&["regions", "--alpha", "1.5", "--beta", "0.9"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "A0");
    let o = run(&["regions", "--alpha", "1.5", "--beta", "0.1"]);
    assert_eq!(stdout(&o).trim(), "A2");
    let o = run(&["rate-calc", "--alpha", "1", "--beta", "0.6", "--gamma", "0", "--iota", "0.001", "--p", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("exponent=0.666"), "{}", stdout(&o));
}

#[test]
fn rate_calc_writes_report_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rate.csv");
    let o = run(&["rate-calc", "--alpha", "1.5", "--beta", "0.9", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let t = CsvTable::parse(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(t.schema, "rate_report/v1");
    assert_eq!(t.columns, ["alpha", "beta", "gamma", "iota", "p", "delta1", "exponent", "region"]);
    assert_eq!(t.rows[0][7], "A0");
    assert_eq!(t.column("exponent").unwrap(), vec![1.0]);
}

#[test]
fn ex1_rows_match_epsilon() {
    let o = run(&["ex1", "--alpha", "0.8", "--eps-ladder", "4"]);
    assert!(o.status.success());
    let t = CsvTable::parse(&stdout(&o)).unwrap();
    assert_eq!(t.rows.len(), 4);
    let eps = t.column("epsilon").unwrap();
    let dt = t.column("dt").unwrap();
    let err = t.column("mean_sup_error_p").unwrap();
    for i in 0..4 {
        assert!((err[i] - eps[i]).abs() <= 2.0 * dt[i], "row {i}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(run(&["regions", "--alpha", "1.5"]).status.code(), Some(64));
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "kind = \"strong_rate\"\nepsilon_list = [0.5, 0.25, 0.125]\n");
    assert_eq!(run(&["strong-rate", "--config", &bad]).status.code(), Some(2));
    let wrong_kind = write_config(dir.path(), "s.toml", SCHAUDER);
    assert_eq!(run(&["strong-rate", "--config", &wrong_kind]).status.code(), Some(2));
    let coarse = STRONG.replace("steps_per_epsilon = 20", "steps_per_epsilon = 4");
    let coarse = write_config(dir.path(), "coarse.toml", &coarse);
    let out = dir.path().join("o");
    let o = run(&["strong-rate", "--config", &coarse, "--strict", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn weak_w1_rejects_planar_systems() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.toml",
        r#"
kind = "weak_w1"
n_paths = 100
epsilon_list = [0.25, 0.125, 0.0625, 0.03125]
[system]
alpha = 1.6
x0 = [0.0, 0.0]
rough_profile = "abs(sin(x))^0.2"
mollify_n = 8
"#,
    );
    let o = run(&["weak-w1", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsupported"));
}

#[test]
fn schauder_run_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SCHAUDER);
    let out = dir.path().join("out");
    let o = run(&["schauder", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("schauder_sweep.csv")).unwrap();
    let t = CsvTable::parse(&csv).unwrap();
    assert_eq!(&t.columns[..4], ["lambda", "eta", "theta", "ratio"]);
    assert_eq!(t.rows.len(), 8);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"][0]["file"], "schauder_sweep.csv");
    assert_eq!(
        manifest["outputs"][0]["sha256"].as_str().unwrap(),
        levy_avg::experiments::sha256_hex(csv.as_bytes())
    );
    assert!(manifest["config"].as_str().unwrap().contains("schauder_sweep"));
}

#[test]
fn csv_bytes_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strong.toml", STRONG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = bin()
        .args(["strong-rate", "--config", &cfg, "--out", a.to_str().unwrap()])
        .env("LEVY_AVG_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["strong-rate", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "6"]);
    assert!(o.status.success());
    let read = |d: &Path| std::fs::read(d.join("strong_rate.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let seeded = dir.path().join("c");
    run(&["strong-rate", "--config", &cfg, "--out", seeded.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(read(&a), read(&seeded));
}
