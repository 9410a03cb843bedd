//! Runs a declarative strong-rate sweep from TOML and writes its CSV table
//! and manifest into a temporary directory.

use levy_avg::experiments::{resolve_threads, run_with_threads, write_outputs, ExperimentConfig};

const CONFIG: &str = r#"
kind = "strong_rate"
master_seed = 2024
n_paths = 400
epsilon_list = [0.125, 0.0625, 0.03125, 0.015625]

[grid]
steps_per_epsilon = 20

[system]
alpha = 1.5
x0 = [0.0]
drift = ["cos(t)*(1 + 0.5*sin(x))"]
averaged_drift = ["0"]
beta = 0.99
period = 6.283185307179586
"#;

fn main() -> levy_avg::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let threads = resolve_threads(None);
    let output = run_with_threads(&cfg, threads)?;
    for line in output.summary() {
        println!("{line}");
    }
    for table in output.tables() {
        print!("{}", table.csv());
    }

    let dir = std::env::temp_dir().join("levy_avg_run_experiment");
    let (_, files) = write_outputs(&dir, &cfg, &output, threads)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
