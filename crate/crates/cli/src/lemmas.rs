//! Verification suite for the expectation identity, the convex sparse
//! decomposition and the rank-one distance inequality.

use cpr_core::bounds::{h_at_one, h_at_zero, h_function, lemma32_check};
use cpr_core::decompose::{decompose, verify_certificate};
use cpr_core::measure::gaussian_vector;
use cpr_core::ripcheck::{lemma22_closed_form, lemma22_monte_carlo, t_grid, xi_expectation_bounds, ExpectationCase, XI_LOWER, XI_UPPER};
use cpr_core::rng::{self, domain};
use cpr_core::{phase_align, ComplexVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::LemmasConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub check: &'static str,
    pub parameter: Option<f64>,
    pub samples: usize,
    pub estimate: f64,
    pub closed_form: Option<f64>,
    pub stderr: Option<f64>,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl LemmaRow {
    fn new(check: &'static str, samples: usize, estimate: f64, deviation: f64, tolerance: f64) -> Self {
        Self {
            check,
            parameter: None,
            samples,
            estimate,
            closed_form: None,
            stderr: None,
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        }
    }
}

/// A random `(v, s, theta)` with `|v|_inf <= theta` and `|v|_1 <= s theta`,
/// of length at most 50. Roughly one in eight sits exactly on `|v|_1 = s theta`.
pub fn decompose_instance(seed: u64, index: u64) -> (Vec<f64>, usize, f64) {
    let mut rng = rng::stream(seed, domain::DECOMPOSE, index);
    let dim = rng.random_range(1..=50usize);
    let s = rng.random_range(1..=dim);
    let theta = rng.random_range(0.1..10.0);
    let density = rng.random_range(0.05..=1.0);
    let mut v: Vec<f64> = (0..dim)
        .map(|_| if rng.random_bool(density) { rng.random_range(-theta..=theta) } else { 0.0 })
        .collect();
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    let budget = s as f64 * theta;
    let boundary = rng.random_bool(0.125);
    if l1 > budget || (boundary && l1 > 0.0 && v.iter().filter(|x| **x != 0.0).count() > s) {
        let target = if boundary { budget } else { budget * rng.random_range(0.5..=1.0) };
        let scale = (target / l1).min(1.0);
        v.iter_mut().for_each(|x| *x *= scale);
    }
    (v, s, theta)
}

/// Random pair in dimension 1..=20 with norms in `[0, 10]`, phase-aligned so
/// that `x* y` is real and non-negative.
pub fn aligned_pair(seed: u64, index: u64) -> (ComplexVector, ComplexVector) {
    let mut rng = rng::stream(seed, domain::PAIRS, index);
    let dim = rng.random_range(1..=20usize);
    let x = scaled_gaussian(&mut rng, dim);
    let y = scaled_gaussian(&mut rng, dim);
    let (y, _) = phase_align(&y, &x).expect("equal lengths");
    (x, y)
}

fn scaled_gaussian<R: Rng>(rng: &mut R, dim: usize) -> ComplexVector {
    let g = gaussian_vector(rng, dim);
    let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let r = rng.random_range(0.0..=10.0);
    let scaled = if norm > 0.0 { g.iter().map(|z| z * (r / norm)).collect() } else { g };
    ComplexVector::new(scaled).expect("finite draw")
}

pub fn run(cfg: &LemmasConfig) -> Result<Vec<LemmaRow>, CliError> {
    let scale = cfg.tolerance_scale;
    let mut rows = Vec::new();

    for (i, &t) in cfg.lemma22_t.iter().enumerate() {
        let mc = lemma22_monte_carlo(t, cfg.lemma22_samples, rng::subseed(cfg.seed, domain::LEMMA22, i as u64))?;
        let cf = lemma22_closed_form(t)?;
        let mut row = LemmaRow::new("lemma22", mc.samples, mc.mean, (mc.mean - cf).abs(), 3.0 * mc.stderr * scale);
        row.parameter = Some(t);
        row.closed_form = Some(cf);
        row.stderr = Some(mc.stderr);
        rows.push(row);
    }

    for (i, t) in t_grid(cfg.xi_cases).into_iter().enumerate() {
        let est = xi_expectation_bounds(
            ExpectationCase::from_t(t)?,
            cfg.xi_samples,
            rng::subseed(cfg.seed, domain::XI, i as u64),
        )?;
        let mean = est.estimate.mean;
        let outside = (XI_LOWER - mean).max(mean - XI_UPPER).max(0.0);
        let mut row = LemmaRow::new("xi_band", est.estimate.samples, mean, outside, 3.0 * est.estimate.stderr * scale);
        row.parameter = Some(t);
        row.closed_form = Some(est.closed_form);
        row.stderr = Some(est.estimate.stderr);
        rows.push(row);
    }

    rows.push(decompose_suite(cfg.seed, cfg.decompose_instances, scale));
    rows.push(lemma32_suite(cfg.seed, cfg.lemma32_pairs, scale));
    rows.extend(h_grid_suite(cfg.h_grid, scale)?);
    Ok(rows)
}

/// Outcome of one decomposition instance: relative reconstruction error, or
/// `None` if any certificate clause or derived property failed.
pub fn check_decomposition(v: &[f64], s: usize, theta: f64) -> Option<f64> {
    let cert = decompose(v, s, theta).ok()?;
    let report = verify_certificate(&cert);
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    let atom_cap = (l1 * theta).sqrt() + 1e-8;
    let outside_support = cert
        .atoms
        .iter()
        .any(|u| u.iter().zip(v).any(|(a, b)| *b == 0.0 && *a != 0.0));
    let too_long = cert
        .atoms
        .iter()
        .any(|u| u.iter().map(|x| x * x).sum::<f64>().sqrt() > atom_cap);
    if !report.ok || outside_support || too_long {
        return None;
    }
    let vmax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Some(if vmax > 0.0 { report.reconstruction_error / vmax } else { report.reconstruction_error })
}

fn decompose_suite(seed: u64, instances: usize, scale: f64) -> LemmaRow {
    let outcomes: Vec<Option<f64>> = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let (v, s, theta) = decompose_instance(seed, i);
            check_decomposition(&v, s, theta)
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let worst = outcomes.iter().flatten().fold(0.0_f64, |m, e| m.max(*e));
    let mut row = LemmaRow::new("decompose", instances, worst, worst, 1e-9 * scale);
    row.pass &= failures == 0;
    row
}

fn lemma32_suite(seed: u64, pairs: usize, scale: f64) -> LemmaRow {
    let slacks: Vec<f64> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let (x, y) = aligned_pair(seed, i);
            let forward = lemma32_check(&x, &y).map_or(f64::NEG_INFINITY, |c| c.slack());
            let swapped = lemma32_check(&y, &x).map_or(f64::NEG_INFINITY, |c| c.slack());
            forward.min(swapped)
        })
        .collect();
    let min = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    LemmaRow::new("lemma32", 2 * pairs, min, (-min).max(0.0), 1e-10 * scale)
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64)
        .collect()
}

fn h_grid_suite(grid: [usize; 3], scale: f64) -> Result<Vec<LemmaRow>, CliError> {
    let (av, bv, tv) = (linspace(0.0, 3.0, grid[0]), linspace(0.0, 3.0, grid[1]), linspace(0.0, 1.0, grid[2]));
    let mut min_h = f64::INFINITY;
    let mut endpoint_err = 0.0_f64;
    for &a in &av {
        for &b in &bv {
            for &t in &tv {
                min_h = min_h.min(h_function(a, b, t)?);
            }
            let size = (a.powi(4) + b.powi(4)).max(f64::MIN_POSITIVE);
            endpoint_err = endpoint_err
                .max((h_function(a, b, 0.0)? - h_at_zero(a, b)).abs() / size)
                .max((h_function(a, b, 1.0)? - h_at_one(a, b)).abs() / size);
        }
    }
    let evaluations = grid.iter().product();
    Ok(vec![
        LemmaRow::new("h_nonnegative", evaluations, min_h, (-min_h).max(0.0), 1e-12 * scale),
        LemmaRow::new("h_endpoints", 2 * grid[0] * grid[1], endpoint_err, endpoint_err, 1e-10 * scale),
    ])
}
