use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDateTime;
use clap::{Args, Parser, Subcommand};
use log::error;
use slacast::features::Variant;
use slacast::multistep::ExogenousPolicy;
use slacast::pipeline::{Pipeline, RunConfig, Stage};
use slacast::{Error, Result};

/// SLA-constrained downlink traffic forecasting.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, env = "SLACAST_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true, env = "SLACAST_SEED")]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true, env = "SLACAST_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "SLACAST_JOBS")]
    jobs: Option<usize>,
    /// Exit with an error when a calibration misses its target.
    #[arg(long, global = true, env = "SLACAST_STRICT_SLA")]
    strict_sla: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or ingest cell data.
    Synth,
    /// Select features and build input recipes.
    Features,
    /// Cross-validated hyperparameter search.
    Train,
    /// Fit loss weights for each SLA target.
    Calibrate,
    /// Forecast from one origin, or over the whole test slice when no origin is given.
    Predict {
        #[arg(long, default_value = "univariate")]
        variant: Variant,
        /// Target violation rate as a fraction.
        #[arg(long, default_value_t = 0.05)]
        sla: f64,
        /// First forecast timestamp, e.g. 2024-12-01T00:00:00.
        #[arg(long, value_parser = parse_origin)]
        origin: Option<NaiveDateTime>,
        #[arg(long, default_value_t = 24)]
        horizon: usize,
        /// seasonal-naive or neighbor-recursive.
        #[arg(long, value_parser = parse_policy)]
        handover_policy: Option<ExogenousPolicy>,
    },
    /// Score forecasts.
    Eval,
    /// Write tables and plot sources.
    Report,
    /// Every stage in order.
    RunAll {
        /// Stop after this stage.
        #[arg(long, env = "SLACAST_STAGE")]
        stage: Option<Stage>,
    },
}

fn parse_origin(s: &str) -> std::result::Result<NaiveDateTime, String> {
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| format!("cannot parse timestamp '{s}'"))
}

fn parse_policy(s: &str) -> std::result::Result<ExogenousPolicy, String> {
    match s {
        "seasonal-naive" => Ok(ExogenousPolicy::SeasonalNaive),
        "neighbor-recursive" => Ok(ExogenousPolicy::NeighborRecursive),
        _ => Err(format!("unknown handover policy '{s}'")),
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    if c.strict_sla {
        cfg.fail_on_unsatisfied = true;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = load_config(&cli.common)?;
    let last = match &cli.command {
        Command::Synth => Stage::Synth,
        Command::Features => Stage::Features,
        Command::Train => Stage::Train,
        Command::Calibrate => Stage::Calibrate,
        Command::Predict { .. } => Stage::Predict,
        Command::Eval => Stage::Eval,
        Command::Report => Stage::Report,
        Command::RunAll { stage } => stage.unwrap_or(Stage::Report),
    };
    if let Command::Predict {
        variant,
        sla,
        origin: Some(origin),
        horizon,
        handover_policy,
    } = cli.command
    {
        if let Some(p) = handover_policy {
            cfg.handover_policy = p;
        }
        let csv = Pipeline::new(cfg)?.forecast(variant, sla, origin, horizon)?;
        print!("{csv}");
        return Ok(());
    }
    let mut pipeline = Pipeline::new(cfg)?;
    let summary = pipeline.run_until(last)?;
    println!("config {}", summary.config_hash);
    for (stage, cached) in &summary.stages {
        println!(
            "{:<10} {:<7} {}",
            stage.name(),
            if *cached { "cached" } else { "built" },
            pipeline.stage_dir(*stage).display()
        );
    }
    for r in &summary.unsatisfied {
        println!(
            "warning: SLA {} not met on validation (best rate {:.4}, w {})",
            r.target, r.violation_rate, r.w
        );
    }
    if last == Stage::Report {
        let path = pipeline.stage_dir(Stage::Report).join("report.md");
        if let Ok(text) = std::fs::read_to_string(&path) {
            println!("\n{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
