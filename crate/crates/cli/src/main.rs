// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ksdetect::{threshold_from_bound, FalseAlarmBudget};
use ksdetect_cli::commands::{benchmark, bound_report, calibration_report};
use ksdetect_cli::monitor::{monitor, MonitorOptions};
use ksdetect_cli::spectrum::ingest_spectrum;
use ksdetect_cli::{exit, CliError, ConfigError, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "ksdetect", version, about = "Windowed KS change detection for count streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute alarm thresholds from a config, or from the closed-form bound.
    Calibrate(CalibrateArgs),
    /// Calibrate, run all replicates and write a results CSV.
    Benchmark(BenchmarkArgs),
    /// Stream `t,x_1,...,x_D` rows through a windowed KS detector.
    Monitor(MonitorArgs),
    /// Parse a spectrum file and print its summary.
    IngestCheck(IngestArgs),
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Experiment config (TOML). Without it the closed-form bound is used.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Writes the machine-readable report (JSON) here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Horizon T for the bound (ignored with --config).
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    /// Window length L for the bound (ignored with --config).
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Expected false alarms per horizon for the bound (ignored with --config).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Results CSV path; overrides the config's `output`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the config's replicate count.
    #[arg(long)]
    replicates: Option<u64>,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    /// Reference spectrum CSV (`bin,weight` or `bin,count`).
    #[arg(long, value_name = "PATH")]
    spectrum: PathBuf,
    /// Count rows; `-` or absent reads standard input.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// JSON-lines output; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Alarm threshold; defaults to the bound for --horizon and --alpha.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Folds spectrum channels and row channels at or above N into channel N.
    #[arg(long, value_name = "N")]
    winsorize_at: Option<usize>,
    /// Stop at the first alarm with exit code 3.
    #[arg(long)]
    halt_on_alarm: bool,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(value_name = "PATH")]
    path: PathBuf,
    #[arg(long, value_name = "N")]
    winsorize_at: Option<usize>,
    /// Writes the normalised spectrum as `bin,weight` CSV.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Calibrate(a) => run_calibrate(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Monitor(a) => run_monitor(a),
        Command::IngestCheck(a) => run_ingest(a),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.calibration.seed = None;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn run_calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let report = match &a.config {
        Some(path) => calibration_report(&load_config(path, a.seed)?)?,
        None => bound_report(a.horizon, a.window, a.alpha)?,
    };
    print!("{}", report.render());
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        serde_json::to_writer_pretty(&mut w, &report).context("writing report")?;
        writeln!(w).and_then(|_| w.flush()).context("writing report")?;
    }
    Ok(())
}

fn run_benchmark(a: BenchmarkArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config, a.seed)?;
    if let Some(r) = a.replicates {
        if r == 0 {
            return Err(ConfigError::field("--replicates", "must be at least 1").into());
        }
        cfg.replicates = r;
    }
    let table = benchmark(&cfg)?;
    print!("{}", table.render());
    if let Some(out) = a.out.as_ref().or(cfg.output.as_ref()) {
        let w = create(out)?;
        table.write_csv(w).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn run_monitor(a: MonitorArgs) -> Result<(), CliError> {
    let (cdf, _) =
        ingest_spectrum(&a.spectrum, a.winsorize_at).map_err(|e| ConfigError::field("--spectrum", &e.to_string()))?;
    let threshold = match a.threshold {
        Some(c) => c,
        None => {
            let budget =
                FalseAlarmBudget::new(a.horizon, a.window, a.alpha).map_err(|e| ConfigError::new(e.to_string()))?;
            threshold_from_bound(&budget)
        }
    };
    let opts =
        MonitorOptions { window: a.window, threshold, halt_on_alarm: a.halt_on_alarm, winsorize_at: a.winsorize_at };
    let input: Box<dyn Read> = match a.input.as_deref() {
        None => Box::new(io::stdin().lock()),
        Some(p) if p == Path::new("-") => Box::new(io::stdin().lock()),
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| ConfigError::field("--input", &format!("{}: {e}", p.display())))?,
        )),
    };
    let out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let summary = monitor(cdf, input, out, io::stderr().lock(), opts)?;
    log::info!("{} row(s), {} alarm(s), {} malformed", summary.rows, summary.alarms, summary.malformed);
    Ok(())
}

fn run_ingest(a: IngestArgs) -> Result<(), CliError> {
    let (cdf, density) =
        ingest_spectrum(&a.path, a.winsorize_at).map_err(|e| ConfigError::new(format!("{}: {e}", a.path.display())))?;
    let weights = density.weights();
    let (mode, peak) =
        weights.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (j, &w)| if w > best.1 { (j, w) } else { best });
    let median = cdf.values().partition_point(|&v| v < 0.5) + 1;
    println!("{}: {} bins", a.path.display(), cdf.bin_count());
    println!("mode bin {} (weight {peak:.6}), median bin {median}", mode + 1);
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_writer(create(out)?);
        w.write_record(["bin", "weight"]).context("writing spectrum")?;
        for (j, x) in weights.iter().enumerate() {
            w.write_record([(j + 1).to_string(), x.to_string()]).context("writing spectrum")?;
        }
        w.flush().context("writing spectrum")?;
    }
    Ok(())
}
