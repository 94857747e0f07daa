//! Recovery trials: single runs, the (k, m) phase-transition sweep and the
//! noise sweep against the stability bounds.

use cpr_core::bounds::stability_bounds;
use cpr_core::measure::{add_noise, apply_map_signal, sample_ensemble, sample_sparse_signal};
use cpr_core::rng::{self, domain};
use cpr_core::solver::{recover, residual_check, InitKind, SolverConfig};
use cpr_core::{aligned_distance, dist_matrix, measurements_for, MeasurementEnsemble, NoiseKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitName, SolverSettings, SweepNoiseConfig, SweepPtConfig};
use crate::CliError;

/// Success threshold on `min_{|c|=1} |c x_hat - x0|_2 / |x0|_2`.
pub const SUCCESS_TOL: f64 = 1e-5;

/// Slack for comparing errors against a bound that is exactly zero.
pub const EXACT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct TrialSetup {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub epsilon: f64,
    pub noise: NoiseKind,
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub trial_seed: u64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub epsilon: f64,
    pub noise_norm: f64,
    pub init: String,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub residual: f64,
    pub residual_ok: bool,
    pub relative_error: f64,
    pub vector_error: f64,
    pub dist_matrix: f64,
    pub l1_norm: f64,
    pub success: bool,
}

/// Seed for trial `trial` of a run seeded with `seed`. The ensemble, signal,
/// noise and solver draws of the trial all derive from it.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::subseed(seed, domain::TRIAL, trial as u64)
}

pub fn run_trial(
    setup: &TrialSetup,
    ensemble: Option<&MeasurementEnsemble>,
    seed: u64,
    trial: usize,
) -> Result<TrialOutcome, CliError> {
    let ts = trial_seed(seed, trial);
    let sampled;
    let ensemble = match ensemble {
        Some(e) => e,
        None => {
            sampled = sample_ensemble(setup.n, setup.m, ts)?;
            &sampled
        }
    };
    let (x0, _) = sample_sparse_signal(ensemble.n(), setup.k, ts)?;
    let clean = apply_map_signal(ensemble, &x0)?;
    let noisy = add_noise(&clean, setup.epsilon, setup.noise, ts)?;
    let init = match setup.solver.init {
        InitName::SpectralSparse => InitKind::SpectralSparse,
        InitName::Random => InitKind::Random,
    };
    let cfg = SolverConfig {
        k: setup.k,
        max_iters: setup.solver.max_iters,
        step_size: setup.solver.step_size,
        tol: setup.solver.tol,
        init,
        seed: ts,
    };
    let res = recover(ensemble, &noisy.y, &cfg)?;
    let x0_norm = x0.norm2();
    let vector_error = aligned_distance(&res.x_hat, &x0)?;
    let relative_error = vector_error / x0_norm;
    Ok(TrialOutcome {
        trial,
        trial_seed: ts,
        n: ensemble.n(),
        k: setup.k,
        m: ensemble.m(),
        epsilon: setup.epsilon,
        noise_norm: noisy.noise_norm,
        init: res.init.clone(),
        iterations: res.iterations,
        converged: res.converged,
        objective: res.objective(),
        residual: res.residual,
        residual_ok: residual_check(ensemble, &res.x_hat, &noisy.y, noisy.noise_norm)?,
        relative_error,
        vector_error,
        dist_matrix: dist_matrix(&res.x_hat, &x0)?,
        l1_norm: res.x_hat.norm1(),
        success: relative_error <= SUCCESS_TOL,
    })
}

/// Independent trials `0..trials`, in trial order.
pub fn run_trials(
    setup: &TrialSetup,
    ensemble: Option<&MeasurementEnsemble>,
    seed: u64,
    trials: usize,
) -> Result<Vec<TrialOutcome>, CliError> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(setup, ensemble, seed, t))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PtCell {
    pub k: usize,
    pub multiplier: Option<f64>,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_iterations: f64,
}

/// Success rates over the `(k, m)` grid, rows sorted by `(k, m)`.
///
/// Trials for a given `k` share their seeds across `m`, and ensemble rows are
/// drawn per index, so a larger `m` extends the same problem instances.
pub fn sweep_pt(cfg: &SweepPtConfig) -> Result<Vec<PtCell>, CliError> {
    let mut k_values = cfg.k_values.clone();
    k_values.sort_unstable();
    k_values.dedup();
    let mut cells: Vec<(usize, Option<f64>, usize)> = Vec::new();
    for &k in &k_values {
        let mut row: Vec<(usize, Option<f64>, usize)> = match (&cfg.multipliers, &cfg.m_values) {
            (_, Some(ms)) => ms.iter().map(|&m| (k, None, m)).collect(),
            (Some(gs), None) => gs.iter().map(|&g| (k, Some(g), measurements_for(cfg.n, k, g))).collect(),
            (None, None) => Vec::new(),
        };
        row.sort_by(|a, b| a.2.cmp(&b.2).then(a.1.unwrap_or(0.0).total_cmp(&b.1.unwrap_or(0.0))));
        cells.extend(row);
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let outcomes: Vec<(bool, usize)> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (k, _, m) = cells[c];
            let setup = TrialSetup {
                n: cfg.n,
                k,
                m,
                epsilon: 0.0,
                noise: NoiseKind::None,
                solver: cfg.solver.clone(),
            };
            let seed = rng::subseed(cfg.seed, domain::TRIAL, k as u64);
            run_trial(&setup, None, seed, t).map(|o| (o.success, o.iterations))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;
    Ok(cells
        .iter()
        .zip(outcomes.chunks(cfg.trials))
        .map(|(&(k, multiplier, m), chunk)| {
            let successes = chunk.iter().filter(|o| o.0).count();
            PtCell {
                k,
                multiplier,
                m,
                trials: cfg.trials,
                successes,
                success_rate: successes as f64 / cfg.trials as f64,
                mean_iterations: chunk.iter().map(|o| o.1 as f64).sum::<f64>() / cfg.trials as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseRow {
    pub epsilon: f64,
    pub trials: usize,
    /// Trials whose output satisfies the data constraint `|A(x_hat) - y|_2 <= eps`.
    pub consistent: usize,
    /// Error statistics over consistent trials.
    pub mean_dist: f64,
    pub max_dist: f64,
    pub mean_vector_error: f64,
    pub max_vector_error: f64,
    /// Largest matrix error over all trials.
    pub max_dist_all: f64,
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub a: f64,
    pub c1: f64,
    pub matrix_bound: f64,
    pub vector_bound: f64,
    pub bound_satisfied: bool,
}

/// Errors against the stability bounds at each noise level. Every level
/// reuses the same ensembles, signals and noise directions.
pub fn sweep_noise(cfg: &SweepNoiseConfig) -> Result<Vec<NoiseRow>, CliError> {
    let mut rows = Vec::new();
    for &epsilon in &cfg.epsilons {
        let setup = TrialSetup {
            n: cfg.n,
            k: cfg.k,
            m: cfg.m,
            epsilon,
            noise: cfg.noise,
            solver: cfg.solver.clone(),
        };
        let outcomes = run_trials(&setup, None, cfg.seed, cfg.trials)?;
        let bound = stability_bounds(&cfg.constants, epsilon, cfg.m, cfg.n, 1.0)?;
        let ok: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.residual_ok).collect();
        let stat = |f: fn(&TrialOutcome) -> f64| {
            let vals: Vec<f64> = ok.iter().map(|o| f(o)).collect();
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            let max = vals.iter().copied().fold(f64::NAN, f64::max);
            (mean, max)
        };
        let (mean_dist, max_dist) = stat(|o| o.dist_matrix);
        let (mean_vector_error, max_vector_error) = stat(|o| o.vector_error);
        rows.push(NoiseRow {
            epsilon,
            trials: cfg.trials,
            consistent: ok.len(),
            mean_dist,
            max_dist,
            mean_vector_error,
            max_vector_error,
            max_dist_all: outcomes.iter().map(|o| o.dist_matrix).fold(f64::NAN, f64::max),
            c: cfg.constants.c,
            big_c: cfg.constants.big_c,
            a: cfg.constants.a,
            c1: bound.c1,
            matrix_bound: bound.matrix_bound,
            vector_bound: bound.vector_bound,
            bound_satisfied: !ok.is_empty()
                && max_dist <= bound.matrix_bound + EXACT_TOL
                && max_vector_error <= bound.vector_bound + EXACT_TOL,
        });
    }
    Ok(rows)
}
