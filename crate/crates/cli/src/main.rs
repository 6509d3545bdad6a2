//! `ogplab <experiment> [flags]`: run one experiment, print the
//! summary record as JSON on stdout, and optionally emit report files.
//!
//! Exit codes: 0 on completion, 2 on configuration errors, 3 when the
//! output location cannot be written, 1 on other runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ogplab_core::harness::{
    run_experiment, workers_from_env, Experiment, ExperimentConfig,
};
use ogplab_core::report::emit_report;
use ogplab_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "ogplab",
    version,
    about = "Overlap-gap experiments on near-shortest s-t paths",
    after_help = "Worker count comes from the OGPLAB_WORKERS environment variable.\n\
                  Config file entries (key = value) override command line flags."
)]
struct Cli {
    /// one of: ogp-gnp, ogp-fpp, estimator, disorder, stability,
    /// moments, fpp-limit, oracle-check
    experiment: String,
    /// vertex count
    #[arg(long)]
    n: Option<usize>,
    /// edge density constant: q = c ln(n) / n
    #[arg(long)]
    c: Option<f64>,
    /// edge probability override
    #[arg(long)]
    q: Option<f64>,
    /// near-optimality tolerance
    #[arg(long)]
    eps: Option<f64>,
    /// pair correlation
    #[arg(long)]
    rho: Option<f64>,
    /// weight diffusion time
    #[arg(long)]
    time: Option<f64>,
    /// interpolation step count
    #[arg(long)]
    steps: Option<usize>,
    /// hop length parameter
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// search expansion cap per enumeration
    #[arg(long = "work-budget")]
    work_budget: Option<u64>,
    /// forbidden overlap band as LO,HI
    #[arg(long)]
    band: Option<String>,
    /// sparsification weight cut for weight-model searches
    /// (default (1+eps) ln(n) / n)
    #[arg(long)]
    threshold: Option<f64>,
    /// condition instances on having no direct s-t edge
    #[arg(long = "condition-no-st")]
    condition_no_st: Option<bool>,
    /// use the complete-graph weight model where both flavors exist
    #[arg(long)]
    fpp: Option<bool>,
    /// report base path; files get .trials/.summary/.hist suffixes
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or jsonl
    #[arg(long)]
    format: Option<String>,
    /// key = value file applied on top of the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let experiment: Experiment = cli.experiment.parse()?;
    let mut cfg = ExperimentConfig::new(experiment);
    if let Some(v) = cli.n {
        cfg.n = v;
    }
    if let Some(v) = cli.c {
        cfg.c = v;
    }
    if let Some(v) = cli.q {
        cfg.q = Some(v);
    }
    if let Some(v) = cli.eps {
        cfg.eps = v;
    }
    if let Some(v) = cli.rho {
        cfg.rho = v;
    }
    if let Some(v) = cli.time {
        cfg.time = v;
    }
    if let Some(v) = cli.steps {
        cfg.steps = v;
    }
    if let Some(v) = cli.m {
        cfg.m = Some(v);
    }
    if let Some(v) = cli.trials {
        cfg.trials = v;
    }
    if let Some(v) = cli.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = cli.work_budget {
        cfg.work_budget = v;
    }
    if let Some(v) = &cli.band {
        cfg.apply_kv("band", v)?;
    }
    if let Some(v) = cli.threshold {
        cfg.threshold = Some(v);
    }
    if let Some(v) = cli.condition_no_st {
        cfg.condition_no_st = v;
    }
    if let Some(v) = cli.fpp {
        cfg.fpp = v;
    }
    if let Some(v) = &cli.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = &cli.format {
        cfg.format = v.parse()?;
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidParam(format!("config file {}: {e}", path.display()))
        })?;
        cfg.apply_config_text(&text)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    let workers = match workers_from_env()? {
        Some(w) => w,
        None => std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1),
    };
    let report = run_experiment(&cfg, workers)?;
    let excluded = report.excluded();
    if excluded > 0 {
        eprintln!("note: {excluded} trial(s) exceeded the work budget and were excluded from rates");
    }
    println!(
        "{}",
        serde_json::to_string(&report.summary).expect("summary serializes")
    );
    if let Some(base) = &cfg.output {
        for path in emit_report(&report, cfg.format, base)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParam(_) | Error::Parse { .. } => ExitCode::from(2),
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
