//! Experiment driver behind the `cpr-lab` binary.

pub mod config;
pub mod lemmas;
pub mod recovery;
pub mod report;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cpr_core::measure::EnsembleFormat;
use cpr_core::ripcheck::{estimate_rip, PAPER_LOWER, PAPER_UPPER};
use cpr_core::sample_ensemble;
use serde::Serialize;

use config::{LemmasConfig, RecoverConfig, RipcheckConfig, Settings, SweepNoiseConfig, SweepPtConfig};
use recovery::TrialSetup;
use report::Report;
use svg::{Chart, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<cpr_core::Error> for CliError {
    fn from(e: cpr_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cpr-lab", version, about = "Compressive phase retrieval experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommandArgs {
    /// JSON file of settings; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical RIP ratios over rank-2 row-sparse Hermitian matrices.
    Ripcheck(CommandArgs),
    /// Monte Carlo and property suites for the supporting lemmas.
    Lemmas(CommandArgs),
    /// Recover sparse signals from phaseless measurements.
    Recover(CommandArgs),
    /// Success rate over a (k, m) grid.
    SweepPt(CommandArgs),
    /// Recovery error against the stability bounds over a noise grid.
    SweepNoise(CommandArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &CommandArgs) {
        match self {
            Command::Ripcheck(a) => ("ripcheck", a),
            Command::Lemmas(a) => ("lemmas", a),
            Command::Recover(a) => ("recover", a),
            Command::SweepPt(a) => ("sweep-pt", a),
            Command::SweepNoise(a) => ("sweep-noise", a),
        }
    }
}

/// What a command produced; `passed` is false only when a lemma check failed.
pub struct Outcome {
    pub report: Report,
    pub chart: Option<Chart>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RipRow {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub samples: usize,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub mean_ratio: f64,
    pub spread: f64,
    pub inside_paper_band: bool,
    pub witness_low_index: usize,
    pub witness_low_lambda1: f64,
    pub witness_low_lambda2: f64,
    pub witness_high_index: usize,
    pub witness_high_lambda1: f64,
    pub witness_high_lambda2: f64,
}

pub fn run_ripcheck(cfg: &RipcheckConfig) -> Result<Vec<RipRow>, CliError> {
    let mut rows = Vec::new();
    for &m in &cfg.m_values {
        let ensemble = match &cfg.loaded {
            Some(e) => e.clone(),
            None => sample_ensemble(cfg.n, m, cfg.seed)?,
        };
        if let Some(path) = &cfg.save_ensemble {
            save_ensemble(&ensemble, path)?;
        }
        let est = estimate_rip(&ensemble, cfg.k, cfg.samples, cfg.seed)?;
        rows.push(RipRow {
            n: est.n,
            m: est.m,
            k: est.k,
            seed: est.seed,
            samples: est.num_samples,
            lower_ratio: est.lower_ratio,
            upper_ratio: est.upper_ratio,
            mean_ratio: est.mean_ratio,
            spread: est.spread(),
            inside_paper_band: est.inside_band(PAPER_LOWER, PAPER_UPPER),
            witness_low_index: est.witness_low.index,
            witness_low_lambda1: est.witness_low.lambda1,
            witness_low_lambda2: est.witness_low.lambda2,
            witness_high_index: est.witness_high.index,
            witness_high_lambda1: est.witness_high.lambda1,
            witness_high_lambda2: est.witness_high.lambda2,
        });
    }
    Ok(rows)
}

fn save_ensemble(ensemble: &cpr_core::MeasurementEnsemble, path: &std::path::Path) -> Result<(), CliError> {
    let format = if path.extension().is_some_and(|e| e == "bin") {
        EnsembleFormat::Binary
    } else {
        EnsembleFormat::Json
    };
    ensemble
        .save(path, format)
        .map_err(|e| CliError::Runtime(format!("cannot write ensemble {}: {e}", path.display())))
}

/// Layers flags over the config file, then runs the command.
pub fn execute(command: &Command) -> Result<(Outcome, Settings), CliError> {
    let (name, args) = command.parts();
    let file = match &args.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let settings = args.settings.clone().over(file);
    if settings.svg.is_some() && matches!(name, "lemmas" | "recover") {
        return Err(CliError::Config(format!("--svg is not available for {name}")));
    }
    let ts = settings.timestamp();
    let outcome = match name {
        "ripcheck" => {
            let cfg = RipcheckConfig::resolve(&settings)?;
            let rows = run_ripcheck(&cfg)?;
            let mut report = Report::new(name, &cfg, ts)?;
            for r in &rows {
                report.push(r)?;
            }
            let series = |label: &str, f: fn(&RipRow) -> f64| Series {
                label: label.into(),
                points: rows.iter().map(|r| (r.m as f64, f(r))).collect(),
                dashed: false,
            };
            let chart = Chart {
                title: format!("Empirical RIP ratios, n={}, k={}", cfg.n, cfg.k),
                x_label: "m".into(),
                y_label: "(1/m)|A(X)|_1 / |X|_F".into(),
                log_x: false,
                log_y: false,
                series: vec![series("upper", |r| r.upper_ratio), series("lower", |r| r.lower_ratio)],
            };
            Outcome { report, chart: Some(chart), passed: true }
        }
        "lemmas" => {
            let cfg = LemmasConfig::resolve(&settings)?;
            let rows = lemmas::run(&cfg)?;
            let mut report = Report::new(name, &cfg, ts)?;
            for r in &rows {
                report.push(r)?;
            }
            Outcome { report, chart: None, passed: rows.iter().all(|r| r.pass) }
        }
        "recover" => {
            let mut cfg = RecoverConfig::resolve(&settings)?;
            if let Some(path) = &cfg.save_ensemble {
                let e = sample_ensemble(cfg.n, cfg.m, recovery::trial_seed(cfg.seed, 0))?;
                save_ensemble(&e, path)?;
                cfg.loaded = Some(e);
            }
            let setup = TrialSetup {
                n: cfg.n,
                k: cfg.k,
                m: cfg.m,
                epsilon: cfg.epsilon,
                noise: cfg.noise,
                solver: cfg.solver.clone(),
            };
            let rows = recovery::run_trials(&setup, cfg.loaded.as_ref(), cfg.seed, cfg.trials)?;
            let mut report = Report::new(name, &cfg, ts)?;
            for r in &rows {
                report.push(r)?;
            }
            Outcome { report, chart: None, passed: true }
        }
        "sweep-pt" => {
            let cfg = SweepPtConfig::resolve(&settings)?;
            let rows = recovery::sweep_pt(&cfg)?;
            let mut report = Report::new(name, &cfg, ts)?;
            for r in &rows {
                report.push(r)?;
            }
            let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
            ks.dedup();
            let by_multiplier = cfg.multipliers.is_some();
            let series = ks
                .iter()
                .map(|&k| Series {
                    label: format!("k={k}"),
                    points: rows
                        .iter()
                        .filter(|r| r.k == k)
                        .map(|r| (r.multiplier.unwrap_or(r.m as f64), r.success_rate))
                        .collect(),
                    dashed: false,
                })
                .collect();
            let chart = Chart {
                title: format!("Recovery success rate, n={}", cfg.n),
                x_label: if by_multiplier { "m / (k ln(n/k))".into() } else { "m".into() },
                y_label: "success rate".into(),
                log_x: false,
                log_y: false,
                series,
            };
            Outcome { report, chart: Some(chart), passed: true }
        }
        _ => {
            let cfg = SweepNoiseConfig::resolve(&settings)?;
            let rows = recovery::sweep_noise(&cfg)?;
            let mut report = Report::new(name, &cfg, ts)?;
            for r in &rows {
                report.push(r)?;
            }
            let series = |label: &str, dashed: bool, f: fn(&recovery::NoiseRow) -> f64| Series {
                label: label.into(),
                points: rows.iter().map(|r| (r.epsilon, f(r))).collect(),
                dashed,
            };
            let chart = Chart {
                title: format!("Noise sweep, n={}, k={}, m={}", cfg.n, cfg.k, cfg.m),
                x_label: "epsilon".into(),
                y_label: "|x x* - x0 x0*|_F".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    series("mean error", false, |r| r.mean_dist),
                    series("max error", false, |r| r.max_dist),
                    series("matrix bound", true, |r| r.matrix_bound),
                ],
            };
            Outcome { report, chart: Some(chart), passed: true }
        }
    };
    Ok((outcome, settings))
}

/// Runs a parsed command line and writes its outputs. Returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let result = execute(&cli.command).and_then(|(outcome, settings)| {
        outcome.report.emit(settings.format(), settings.out.as_deref())?;
        if let (Some(path), Some(chart)) = (&settings.svg, &outcome.chart) {
            report::write_text(Some(path), &chart.render())?;
        }
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("cpr-lab: one or more checks failed");
            1
        }
        Err(e) => {
            eprintln!("cpr-lab: {e}");
            e.exit_code()
        }
    }
}

/// Applies `CPR_LAB_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CPR_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("CPR_LAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}
