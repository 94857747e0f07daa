//! Flag and config-file settings, and their resolution into per-command
//! configurations. Flags override file values, which override defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cpr_core::bounds::RipConstants;
use cpr_core::measure::NoiseKind;
use cpr_core::ripcheck::{DEFAULT_MULTIPLIER, PAPER_LOWER, PAPER_UPPER};
use cpr_core::{measurements_for, MeasurementEnsemble};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    SpectralSparse,
    Random,
}

/// Every setting is optional so that flags and file values can be layered.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Signal dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of measurements (overrides --multiplier).
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated list of measurement counts.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<usize>>,
    /// m = ceil(multiplier * k * ln(n/k)).
    #[arg(long)]
    pub multiplier: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub multiplier_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise level |w|_2.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon_grid: Option<Vec<f64>>,
    /// Oversampling factor in the stability condition.
    #[arg(long)]
    pub a: Option<f64>,
    /// none, gaussian_rescaled or adversarial_sphere.
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    #[arg(long, value_enum)]
    pub init: Option<InitName>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Use c = 0.12, C = 2.45 for the bound columns.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub paper_constants: Option<bool>,
    /// Take c, C from the first row of a ripcheck report (CSV or JSON).
    #[arg(long)]
    pub rip_report: Option<PathBuf>,
    /// Load the measurement ensemble from a file instead of sampling it.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Write the sampled ensemble (binary if the name ends in .bin, JSON otherwise).
    #[arg(long)]
    pub save_ensemble: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_timestamp: Option<bool>,
    /// Also write a static SVG line chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Scales every pass/fail tolerance of the lemma suite.
    #[arg(long, hide = true)]
    pub tolerance_scale: Option<f64>,
}

macro_rules! layer {
    ($hi:expr, $lo:expr, $($field:ident),*) => {
        Settings { $($field: $hi.$field.or($lo.$field)),* }
    };
}

impl Settings {
    /// Values from `self` win; gaps are filled from `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        layer!(
            self, lower, n, k, m, m_grid, multiplier, multiplier_grid, k_grid, trials, samples, seed, epsilon,
            epsilon_grid, a, noise, init, max_iters, step_size, paper_constants, rip_report, ensemble,
            save_ensemble, out, format, no_timestamp, svg, tolerance_scale
        )
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    pub fn timestamp(&self) -> bool {
        !self.no_timestamp.unwrap_or(false)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        return Err(config_err(format!("--{name} must be positive")));
    }
    Ok(v)
}

fn nonempty<T>(name: &str, v: Vec<T>) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        return Err(config_err(format!("--{name} must not be empty")));
    }
    Ok(v)
}

fn check_nk(n: usize, k: usize) -> Result<(), CliError> {
    positive("n", n)?;
    positive("k", k)?;
    if k > n {
        return Err(config_err(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

fn check_multiplier(v: f64) -> Result<f64, CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(config_err(format!("multiplier must be positive, got {v}")));
    }
    Ok(v)
}

fn check_epsilon(v: f64) -> Result<f64, CliError> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(config_err(format!("epsilon must be finite and >= 0, got {v}")));
    }
    Ok(v)
}

fn load_ensemble(path: &Option<PathBuf>) -> Result<Option<MeasurementEnsemble>, CliError> {
    path.as_ref()
        .map(|p| {
            MeasurementEnsemble::load(p)
                .map_err(|e| config_err(format!("cannot load ensemble {}: {e}", p.display())))
        })
        .transpose()
}

#[derive(Debug, Clone, Serialize)]
pub struct RipcheckConfig {
    pub n: usize,
    pub k: usize,
    pub m_values: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub ensemble: Option<PathBuf>,
    pub save_ensemble: Option<PathBuf>,
    #[serde(skip)]
    pub loaded: Option<MeasurementEnsemble>,
}

impl RipcheckConfig {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let loaded = load_ensemble(&s.ensemble)?;
        let n = loaded.as_ref().map_or(s.n.unwrap_or(64), |e| e.n());
        let k = s.k.unwrap_or(4);
        check_nk(n, k)?;
        let m_values = if let Some(e) = &loaded {
            vec![e.m()]
        } else if let Some(grid) = &s.m_grid {
            nonempty("m-grid", grid.clone())?
        } else if let Some(grid) = &s.multiplier_grid {
            let grid = nonempty("multiplier-grid", grid.clone())?;
            grid.into_iter()
                .map(|g| check_multiplier(g).map(|g| measurements_for(n, k, g)))
                .collect::<Result<_, _>>()?
        } else if let Some(m) = s.m {
            vec![m]
        } else {
            vec![measurements_for(n, k, check_multiplier(s.multiplier.unwrap_or(DEFAULT_MULTIPLIER))?)]
        };
        for &m in &m_values {
            positive("m", m)?;
        }
        if s.save_ensemble.is_some() && m_values.len() != 1 {
            return Err(config_err("--save-ensemble needs a single m"));
        }
        Ok(Self {
            n,
            k,
            m_values,
            samples: positive("samples", s.samples.unwrap_or(10_000))?,
            seed: s.seed(),
            ensemble: s.ensemble.clone(),
            save_ensemble: s.save_ensemble.clone(),
            loaded,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmasConfig {
    pub seed: u64,
    pub lemma22_t: Vec<f64>,
    pub lemma22_samples: usize,
    pub xi_cases: usize,
    pub xi_samples: usize,
    pub decompose_instances: usize,
    pub lemma32_pairs: usize,
    pub h_grid: [usize; 3],
    pub tolerance_scale: f64,
}

impl LemmasConfig {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let samples = s.samples.unwrap_or(1_000_000);
        if samples < 1000 {
            return Err(config_err("--samples must be at least 1000"));
        }
        let tolerance_scale = s.tolerance_scale.unwrap_or(1.0);
        if !(tolerance_scale >= 0.0 && tolerance_scale.is_finite()) {
            return Err(config_err("tolerance scale must be finite and >= 0"));
        }
        Ok(Self {
            seed: s.seed(),
            lemma22_t: vec![0.0, -0.25, -0.5, -0.75, -1.0],
            lemma22_samples: samples,
            xi_cases: 21,
            xi_samples: samples,
            decompose_instances: positive("trials", s.trials.unwrap_or(1000))?,
            lemma32_pairs: 100_000,
            h_grid: [200, 200, 50],
            tolerance_scale,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSettings {
    pub init: InitName,
    pub max_iters: usize,
    pub step_size: f64,
    pub tol: f64,
}

impl SolverSettings {
    fn resolve(s: &Settings) -> Result<Self, CliError> {
        let out = Self {
            init: s.init.unwrap_or(InitName::SpectralSparse),
            max_iters: positive("max-iters", s.max_iters.unwrap_or(2000))?,
            step_size: s.step_size.unwrap_or(0.05),
            tol: 1e-12,
        };
        if !(out.step_size > 0.0 && out.step_size.is_finite()) {
            return Err(config_err("--step-size must be positive"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoverConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub noise: NoiseKind,
    pub solver: SolverSettings,
    pub ensemble: Option<PathBuf>,
    pub save_ensemble: Option<PathBuf>,
    #[serde(skip)]
    pub loaded: Option<MeasurementEnsemble>,
}

impl RecoverConfig {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let loaded = load_ensemble(&s.ensemble)?;
        let n = loaded.as_ref().map_or(s.n.unwrap_or(128), |e| e.n());
        let k = s.k.unwrap_or(5);
        check_nk(n, k)?;
        let m = match (&loaded, s.m) {
            (Some(e), _) => e.m(),
            (None, Some(m)) => m,
            (None, None) => measurements_for(n, k, check_multiplier(s.multiplier.unwrap_or(8.0))?),
        };
        let trials = positive("trials", s.trials.unwrap_or(1))?;
        if s.save_ensemble.is_some() && (loaded.is_some() || trials != 1) {
            return Err(config_err("--save-ensemble needs a single sampled trial"));
        }
        Ok(Self {
            n,
            k,
            m: positive("m", m)?,
            trials,
            seed: s.seed(),
            epsilon: check_epsilon(s.epsilon.unwrap_or(0.0))?,
            noise: s.noise.unwrap_or(NoiseKind::GaussianRescaled),
            solver: SolverSettings::resolve(s)?,
            ensemble: s.ensemble.clone(),
            save_ensemble: s.save_ensemble.clone(),
            loaded,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPtConfig {
    pub n: usize,
    pub k_values: Vec<usize>,
    /// Either multipliers or explicit measurement counts.
    pub multipliers: Option<Vec<f64>>,
    pub m_values: Option<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverSettings,
}

impl SweepPtConfig {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let n = positive("n", s.n.unwrap_or(128))?;
        let k_values = nonempty("k-grid", s.k_grid.clone().unwrap_or_else(|| (2..=10).collect()))?;
        for &k in &k_values {
            check_nk(n, k)?;
        }
        let (multipliers, m_values) = match (&s.m_grid, &s.multiplier_grid) {
            (Some(grid), _) => {
                let grid = nonempty("m-grid", grid.clone())?;
                for &m in &grid {
                    positive("m", m)?;
                }
                (None, Some(grid))
            }
            (None, grid) => {
                let grid = nonempty(
                    "multiplier-grid",
                    grid.clone().unwrap_or_else(|| (2..=10).map(f64::from).collect()),
                )?;
                for &g in &grid {
                    check_multiplier(g)?;
                }
                (Some(grid), None)
            }
        };
        Ok(Self {
            n,
            k_values,
            multipliers,
            m_values,
            trials: positive("trials", s.trials.unwrap_or(50))?,
            seed: s.seed(),
            solver: SolverSettings::resolve(s)?,
        })
    }
}

/// Where the RIP constants of the bound columns came from.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ConstantsSource {
    Paper,
    RipReport { path: PathBuf },
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepNoiseConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub noise: NoiseKind,
    pub constants: RipConstants,
    pub constants_source: ConstantsSource,
    pub solver: SolverSettings,
}

impl SweepNoiseConfig {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let n = s.n.unwrap_or(64);
        let k = s.k.unwrap_or(3);
        check_nk(n, k)?;
        let m = positive(
            "m",
            match s.m {
                Some(m) => m,
                None => measurements_for(n, k, check_multiplier(s.multiplier.unwrap_or(20.0))?),
            },
        )?;
        let epsilons = nonempty("epsilon-grid", s.epsilon_grid.clone().unwrap_or_else(|| vec![0.0, 0.01, 0.1, 1.0]))?;
        for &e in &epsilons {
            check_epsilon(e)?;
        }
        let (c, big_c, constants_source) = match (&s.rip_report, s.paper_constants) {
            (Some(_), Some(true)) => {
                return Err(config_err("--paper-constants and --rip-report are mutually exclusive"));
            }
            (Some(path), _) => {
                let (c, big_c) = crate::report::read_rip_row(path)?;
                (c, big_c, ConstantsSource::RipReport { path: path.clone() })
            }
            (None, _) => (PAPER_LOWER, PAPER_UPPER, ConstantsSource::Paper),
        };
        let a = s.a.unwrap_or_else(|| 2.0 * RipConstants::sufficient_a(c, big_c));
        let constants = RipConstants::new(c, big_c, a, k).map_err(|e| config_err(e.to_string()))?;
        Ok(Self {
            n,
            k,
            m,
            epsilons,
            trials: positive("trials", s.trials.unwrap_or(20))?,
            seed: s.seed(),
            noise: s.noise.unwrap_or(NoiseKind::GaussianRescaled),
            constants,
            constants_source,
            solver: SolverSettings::resolve(s)?,
        })
    }
}
