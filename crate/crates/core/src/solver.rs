//! Hard-thresholded gradient descent on the intensity loss
//! `f(x) = (1/m) sum_j (|<a_j, x>|^2 - y_j)^2`, started from a sparse
//! spectral estimate.
//!
//! Each iteration takes a gradient step of size `step_size / mean(y)` and
//! keeps the `k` largest-modulus entries. A step that does not decrease `f`
//! is halved, up to 20 times; if none of the halvings help the solver stops.
//! The solver is a sparsity-constrained surrogate for the `l1` program and
//! makes no claim of reaching its global minimizer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_dims, ComplexVector};
use crate::error::{Error, Result};
use crate::measure::{apply_map_signal, gaussian_vector, MeasurementEnsemble};
use crate::rng::{self, domain};

const MAX_HALVINGS: usize = 20;
const DIVERGENCE_FACTOR: f64 = 1e6;
const POWER_ITERS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitKind {
    SpectralSparse,
    /// `truth + delta * g / |g|` for a Gaussian direction `g`. For basin and
    /// regression tests only.
    GroundTruthPerturbed { truth: ComplexVector, delta: f64 },
    /// Gaussian vector scaled to `sqrt(mean(y))`.
    Random,
}

impl InitKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SpectralSparse => "spectral_sparse",
            Self::GroundTruthPerturbed { .. } => "ground_truth_perturbed",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Step scale; the actual step is `step_size / mean(y)`.
    pub step_size: f64,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    pub init: InitKind,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 2000,
            step_size: 0.05,
            tol: 1e-12,
            init: InitKind::SpectralSparse,
            seed: 0,
        }
    }

    pub fn with_init(mut self, init: InitKind) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidParameter(format!("need 1 <= k <= n (k={}, n={n})", self.k)));
        }
        if self.max_iters == 0 || !(self.tol > 0.0) || !(self.step_size > 0.0) {
            return Err(Error::InvalidParameter("need max_iters >= 1, tol > 0, step_size > 0".into()));
        }
        if let InitKind::GroundTruthPerturbed { truth, delta } = &self.init {
            check_dims(n, truth.len())?;
            if !(*delta >= 0.0) {
                return Err(Error::InvalidParameter("perturbation must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: ComplexVector,
    /// Objective after initialization, then after every accepted step.
    pub objective_trace: Vec<f64>,
    /// `|A(x_hat) - y|_2`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub init: String,
}

impl RecoveryResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub x: ComplexVector,
    /// Estimated support, increasing.
    pub support: Vec<usize>,
    /// Set when `y` carries no energy; `x` is then zero.
    pub zero_measurements: bool,
}

fn check_y(ensemble: &MeasurementEnsemble, y: &[f64]) -> Result<()> {
    check_dims(ensemble.m(), y.len())?;
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Indices of the `k` largest values, lowest index first on ties, returned sorted.
fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Keeps the `k` largest-modulus entries.
pub fn hard_threshold(x: &[Complex64], k: usize) -> Vec<Complex64> {
    let moduli: Vec<f64> = x.iter().map(|z| z.norm_sqr()).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for i in top_k(&moduli, k) {
        out[i] = x[i];
    }
    out
}

/// Support estimate from the marginal scores `(1/m) sum_j y_j |a_ji|^2`,
/// then `sqrt(mean(y))` times the leading eigenvector of
/// `(1/m) sum_j y_j a_{j,S} a_{j,S}*` on that support.
pub fn spectral_init(ensemble: &MeasurementEnsemble, y: &[f64], k: usize) -> Result<SpectralInit> {
    check_y(ensemble, y)?;
    let n = ensemble.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n (k={k}, n={n})")));
    }
    let my = mean(y);
    if !(my > 0.0) {
        return Ok(SpectralInit {
            x: ComplexVector::zeros(n),
            support: Vec::new(),
            zero_measurements: true,
        });
    }
    let m = ensemble.m() as f64;
    let mut scores = vec![0.0; n];
    for (a, &yj) in ensemble.vectors().zip(y) {
        for (s, ai) in scores.iter_mut().zip(a) {
            *s += yj * ai.norm_sqr();
        }
    }
    let support = top_k(&scores, k);

    let mut weighted = vec![Complex64::new(0.0, 0.0); k * k];
    for (a, &yj) in ensemble.vectors().zip(y) {
        for (p, &i) in support.iter().enumerate() {
            let ai = a[i] * (yj / m);
            for (q, &l) in support.iter().enumerate() {
                weighted[p * k + q] += ai * a[l].conj();
            }
        }
    }
    let v = leading_eigenvector(&weighted, k);
    let scale = my.sqrt();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (p, &i) in support.iter().enumerate() {
        x[i] = v[p] * scale;
    }
    Ok(SpectralInit {
        x: ComplexVector::new(x)?,
        support,
        zero_measurements: false,
    })
}

/// Power iteration on a Hermitian positive semidefinite `k x k` matrix.
fn leading_eigenvector(mat: &[Complex64], k: usize) -> Vec<Complex64> {
    // Start off-axis so the start is not orthogonal to a coordinate eigenvector.
    let mut v: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64))
        .collect();
    normalize(&mut v);
    let mut rayleigh = 0.0;
    for _ in 0..POWER_ITERS {
        let mut w: Vec<Complex64> = (0..k)
            .map(|p| (0..k).map(|q| mat[p * k + q] * v[q]).sum())
            .collect();
        let next = crate::algebra::inner(&v, &w).re;
        if normalize(&mut w) == 0.0 {
            break;
        }
        v = w;
        if (next - rayleigh).abs() <= 1e-15 * next.abs() {
            break;
        }
        rayleigh = next;
    }
    v
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
    norm
}

/// Nonzero positions of `x`.
fn nonzeros(x: &[Complex64]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] != Complex64::new(0.0, 0.0)).collect()
}

/// `<a_j, x>` for all `j`, touching only the nonzeros of `x`.
fn projections(ensemble: &MeasurementEnsemble, x: &[Complex64]) -> Vec<Complex64> {
    ensemble.linear_on(x, &nonzeros(x))
}

/// `(1/m) sum_j (|<a_j, x>|^2 - y_j)^2`.
pub fn objective(ensemble: &MeasurementEnsemble, y: &[f64], x: &[Complex64]) -> f64 {
    let z = projections(ensemble, x);
    z.iter().zip(y).map(|(zj, yj)| (zj.norm_sqr() - yj).powi(2)).sum::<f64>() / y.len() as f64
}

/// Gradient of [`objective`] with respect to the real coordinates
/// `(Re x_i, Im x_i)`, packed as `d/dRe + i d/dIm`:
/// `(4/m) sum_j (|<a_j, x>|^2 - y_j) <a_j, x> a_j`.
pub fn gradient(ensemble: &MeasurementEnsemble, y: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    let z = projections(ensemble, x);
    let scale = 4.0 / y.len() as f64;
    let mut g = vec![Complex64::new(0.0, 0.0); ensemble.n()];
    for ((a, zj), yj) in ensemble.vectors().zip(&z).zip(y) {
        let w = *zj * ((zj.norm_sqr() - yj) * scale);
        for (gi, ai) in g.iter_mut().zip(a) {
            *gi += ai * w;
        }
    }
    g
}

fn initial_point(ensemble: &MeasurementEnsemble, y: &[f64], cfg: &SolverConfig) -> Result<Vec<Complex64>> {
    let n = ensemble.n();
    let x = match &cfg.init {
        InitKind::SpectralSparse => spectral_init(ensemble, y, cfg.k)?.x.into_vec(),
        InitKind::GroundTruthPerturbed { truth, delta } => {
            let mut rng = rng::stream(cfg.seed, domain::SOLVER, 0);
            let mut g = gaussian_vector(&mut rng, n);
            normalize(&mut g);
            truth.iter().zip(&g).map(|(t, d)| t + d * *delta).collect()
        }
        InitKind::Random => {
            let mut rng = rng::stream(cfg.seed, domain::SOLVER, 1);
            let mut g = gaussian_vector(&mut rng, n);
            normalize(&mut g);
            let s = mean(y).max(0.0).sqrt();
            g.iter().map(|z| z * s).collect()
        }
    };
    Ok(hard_threshold(&x, cfg.k))
}

pub fn recover(ensemble: &MeasurementEnsemble, y: &[f64], cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_y(ensemble, y)?;
    cfg.validate(ensemble.n())?;
    let my = mean(y);
    let base_step = if my > 0.0 { cfg.step_size / my } else { cfg.step_size };

    let mut x = initial_point(ensemble, y, cfg)?;
    let mut f = objective(ensemble, y, &x);
    let f0 = f;
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        if f == 0.0 {
            converged = true;
            break;
        }
        let g = gradient(ensemble, y, &x);
        let mut step = base_step;
        let mut accepted = None;
        let mut overflowed = 0;
        for _ in 0..=MAX_HALVINGS {
            let moved: Vec<Complex64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi * step).collect();
            let candidate = hard_threshold(&moved, cfg.k);
            let fc = objective(ensemble, y, &candidate);
            if fc.is_finite() && fc <= f {
                accepted = Some((candidate, fc));
                break;
            }
            if !fc.is_finite() {
                overflowed += 1;
            }
            step *= 0.5;
        }
        let Some((candidate, fc)) = accepted else {
            if overflowed > MAX_HALVINGS {
                return Err(Error::Diverged { trace });
            }
            // No descent left at any step size.
            converged = true;
            break;
        };
        iterations += 1;
        let relative = (f - fc) / f;
        x = candidate;
        f = fc;
        trace.push(f);
        if !f.is_finite() || f > DIVERGENCE_FACTOR * f0.max(f64::MIN_POSITIVE) {
            return Err(Error::Diverged { trace });
        }
        if relative < cfg.tol {
            converged = true;
            break;
        }
    }
    if trace.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { trace });
    }

    let x_hat = ComplexVector::new(x)?;
    let residual = residual_norm(ensemble, &x_hat, y)?;
    Ok(RecoveryResult {
        x_hat,
        objective_trace: trace,
        residual,
        iterations,
        converged,
        init: cfg.init.name().to_string(),
    })
}

/// `|A(x) - y|_2`.
pub fn residual_norm(ensemble: &MeasurementEnsemble, x: &ComplexVector, y: &[f64]) -> Result<f64> {
    check_y(ensemble, y)?;
    let ax = apply_map_signal(ensemble, x)?;
    Ok(ax.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Whether `x` satisfies the data constraint `|A(x) - y|_2 <= epsilon`.
pub fn residual_check(ensemble: &MeasurementEnsemble, x: &ComplexVector, y: &[f64], epsilon: f64) -> Result<bool> {
    Ok(residual_norm(ensemble, x, y)? <= epsilon + 1e-10)
}
