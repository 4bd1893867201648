//! Thin CLI over the experiment harness: one subcommand per experiment
//! kind, flags overriding the config document.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otfs_isac::harness::{
    parse_config, rows_to_csv, rows_to_json, run_experiment, write_results, ExperimentKind,
    OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "otfs-isac",
    about = "Position error bounds and max-min power allocation for cell-free OTFS ISAC downlinks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config document (flat sectioned key = value text).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials override.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads; 0 or omitted means all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact vs. approximate position bounds under equal power.
    PebValidate,
    /// Worst-user spectral efficiency across sensing-bound thresholds.
    Tradeoff,
    /// Resolvable paths and spectral efficiency across speeds and grids.
    VelocitySweep,
    /// One max-min power allocation per trial.
    Allocate,
    /// Brute-force and finite-difference oracle suites.
    OracleCheck,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::PebValidate => ExperimentKind::PebValidate,
            Command::Tradeoff => ExperimentKind::Tradeoff,
            Command::VelocitySweep => ExperimentKind::VelocitySweep,
            Command::Allocate => ExperimentKind::Allocate,
            Command::OracleCheck => ExperimentKind::OracleCheck,
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    cfg.kind = Some(cli.command.kind());
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
        cfg.params.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err("trials must be at least 1".into());
        }
        cfg.trials = trials;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(fmt) = &cli.format {
        cfg.format = OutputFormat::parse(fmt).ok_or_else(|| format!("unknown format `{fmt}`"))?;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }

    let (rows, summary) = run_experiment(&cfg).map_err(|e| e.to_string())?;
    match &cfg.out {
        Some(path) => {
            write_results(&rows, path, cfg.format).map_err(|e| e.to_string())?;
            eprintln!("wrote {} rows to {}", summary.rows, path.display());
        }
        None => {
            let text = match cfg.format {
                OutputFormat::Csv => rows_to_csv(&rows),
                OutputFormat::Json => rows_to_json(&rows),
            };
            print!("{text}");
        }
    }
    if cfg.kind == Some(ExperimentKind::OracleCheck) {
        let failed = rows.iter().filter(|r| r.status != "ok").count();
        eprintln!("oracle cases: {} total, {} failed", rows.len(), failed);
        if failed > 0 {
            return Ok(1);
        }
    }
    Ok(if summary.infeasible_only { 2 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
