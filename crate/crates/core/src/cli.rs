//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! resolution error, 64 usage error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::averaging::{self, RateSpec};
use crate::error::Error;
use crate::experiments::{self, ExperimentConfig, ExperimentKind};
use crate::io::CsvTable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "levy-avg", version, about = "Averaging experiments for multiscale SDEs with alpha-stable noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV tables and the manifest.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count; falls back to LEVY_AVG_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Turns under-resolved steps into errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coupled strong-error sweep over the epsilon ladder.
    StrongRate(RunArgs),
    /// W1 distances between marginals of independent ensembles.
    WeakW1(RunArgs),
    /// Slow-fast system against its averaged limit.
    SlowFast(RunArgs),
    /// Schauder ratio over a lambda ladder.
    Schauder(RunArgs),
    /// Mollifier growth and decay slopes.
    Mollifier(RunArgs),
    /// Oscillating drift cos(t/eps) with exact error eps.
    Ex1 {
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        /// Number of ladder entries 2^-4, 2^-5, ...
        #[arg(long, default_value_t = 6)]
        eps_ladder: usize,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        strict: bool,
    },
    /// Region label of (alpha, beta).
    Regions {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
    },
    /// Theoretical strong-rate exponent.
    RateCalc {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Defaults to beta.
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = averaging::DEFAULT_IOTA)]
        iota: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Writes the report as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn subcommand_kind(cmd: &Command) -> Option<ExperimentKind> {
    Some(match cmd {
        Command::StrongRate(_) => ExperimentKind::StrongRate,
        Command::WeakW1(_) => ExperimentKind::WeakW1,
        Command::SlowFast(_) => ExperimentKind::SlowFast,
        Command::Schauder(_) => ExperimentKind::SchauderSweep,
        Command::Mollifier(_) => ExperimentKind::MollifierCheck,
        _ => return None,
    })
}

fn run_experiment(
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
    threads: Option<usize>,
    strict: bool,
    dir: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> crate::Result<experiments::ExperimentOutput> {
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.strict |= strict;
    let threads = experiments::resolve_threads(threads);
    let output = experiments::run_with_threads(&cfg, threads)?;
    for line in output.summary() {
        writeln!(out, "{line}")?;
    }
    if let Some(dir) = dir {
        let (_, files) = experiments::write_outputs(dir, &cfg, &output, threads)?;
        for f in files {
            writeln!(out, "wrote {}", f.display())?;
        }
    }
    Ok(output)
}

fn execute(cmd: Command, out: &mut dyn Write) -> crate::Result<()> {
    match cmd {
        Command::Regions { alpha, beta } => {
            writeln!(out, "{}", averaging::region_classify(alpha, beta)?)?;
        }
        Command::RateCalc {
            alpha,
            beta,
            gamma,
            iota,
            p,
            out: path,
        } => {
            let report = averaging::theoretical_rate(&RateSpec::new(alpha, beta, gamma.unwrap_or(beta), iota, p)?)?;
            writeln!(
                out,
                "alpha={} beta={} gamma={} iota={} p={} delta1={:.6} exponent={:.6} region={}",
                report.alpha, report.beta, report.gamma, report.iota, report.p, report.delta1, report.exponent, report.region
            )?;
            if let Some(path) = path {
                crate::io::rate_reports_csv(&[report]).write(&path)?;
            }
        }
        Command::Ex1 {
            alpha,
            eps_ladder,
            paths,
            out: dir,
            seed,
            threads,
            strict,
        } => {
            let cfg = ExperimentConfig::ex1(alpha, eps_ladder, paths);
            let mut summary = Vec::new();
            let output = run_experiment(cfg, seed, threads, strict, dir.as_deref(), &mut summary)?;
            for t in output.tables() {
                let mut csv = CsvTable::parse(&t.csv())?;
                csv.columns.push("deviation".into());
                for row in &mut csv.rows {
                    let dev = row[2].parse::<f64>().unwrap_or(f64::NAN) - row[0].parse::<f64>().unwrap_or(f64::NAN);
                    row.push(crate::io::fmt_num(dev));
                }
                write!(out, "{}", csv.render())?;
            }
            for line in String::from_utf8_lossy(&summary).lines() {
                writeln!(out, "# {line}")?;
            }
        }
        cmd => {
            let kind = subcommand_kind(&cmd).expect("experiment subcommand");
            let (Command::StrongRate(a)
            | Command::WeakW1(a)
            | Command::SlowFast(a)
            | Command::Schauder(a)
            | Command::Mollifier(a)) = cmd
            else {
                unreachable!()
            };
            let text = std::fs::read_to_string(&a.config)?;
            let cfg = ExperimentConfig::from_toml(&text)?;
            if cfg.kind != kind {
                return Err(Error::Config(format!(
                    "config describes {:?} but the subcommand runs {kind:?}",
                    cfg.kind
                )));
            }
            run_experiment(cfg, a.seed, a.threads, a.strict, Some(&a.out), out)?;
        }
    }
    Ok(())
}
