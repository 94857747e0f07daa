//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string so the page needs no generated type definitions.

use cpr_core::ripcheck::{lemma22_closed_form, lemma22_monte_carlo, sample_ratios};
use cpr_core::solver::{recover, SolverConfig};
use cpr_core::{
    add_noise, aligned_distance, apply_map_signal, dist_matrix, sample_ensemble, sample_sparse_signal, NoiseKind,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest problem the page will run; keeps the main thread responsive.
const MAX_WORK: usize = 4_000_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn budget(work: usize) -> Result<(), String> {
    if work > MAX_WORK {
        Err(format!("problem too large for the demo ({work} > {MAX_WORK} operations)"))
    } else {
        Ok(())
    }
}

/// Monte Carlo estimates of `E|z1|...` against the closed form `2(1+t^2)/(1-t)`
/// at `points` values of t spread over [-1, 0].
#[wasm_bindgen]
pub fn lemma22_curve(points: usize, samples: usize, seed: u32) -> Result<String, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    budget(points.saturating_mul(samples))?;
    let rows = (0..points)
        .map(|i| {
            let t = 0.0 - i as f64 / (points - 1) as f64;
            let mc = lemma22_monte_carlo(t, samples, u64::from(seed) + i as u64).map_err(err)?;
            Ok(json!({
                "t": t,
                "closed_form": lemma22_closed_form(t).map_err(err)?,
                "mean": mc.mean,
                "stderr": mc.stderr,
            }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(serde_json::Value::Array(rows).to_string())
}

/// Ratios `(1/m)|A(X)|_1 / |X|_F` over sampled rank-2, k-row-sparse unit matrices.
#[wasm_bindgen]
pub fn rip_ratios(n: usize, k: usize, m: usize, samples: usize, seed: u32) -> Result<String, String> {
    budget(samples.saturating_mul(m).saturating_mul(k))?;
    let e = sample_ensemble(n, m, u64::from(seed)).map_err(err)?;
    let ratios = sample_ratios(&e, k, samples, u64::from(seed)).map_err(err)?;
    let lower = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "n": n, "k": k, "m": m,
        "lower": lower,
        "upper": upper,
        "mean": ratios.iter().sum::<f64>() / ratios.len() as f64,
        "ratios": ratios,
    })
    .to_string())
}

/// One recovery from `m` phaseless measurements of a random k-sparse signal.
#[wasm_bindgen]
pub fn recover_demo(n: usize, k: usize, m: usize, epsilon: f64, seed: u32) -> Result<String, String> {
    budget(n.saturating_mul(m))?;
    let seed = u64::from(seed);
    let e = sample_ensemble(n, m, seed).map_err(err)?;
    let (x0, _) = sample_sparse_signal(n, k, seed).map_err(err)?;
    let clean = apply_map_signal(&e, &x0).map_err(err)?;
    let noisy = add_noise(&clean, epsilon, NoiseKind::GaussianRescaled, seed).map_err(err)?;
    let res = recover(&e, &noisy.y, &SolverConfig::new(k).with_seed(seed)).map_err(err)?;
    let moduli = |v: &[cpr_core::Complex64]| v.iter().map(|z| z.norm()).collect::<Vec<_>>();
    Ok(json!({
        "x0": moduli(x0.as_slice()),
        "x_hat": moduli(res.x_hat.as_slice()),
        "objective_trace": res.objective_trace,
        "iterations": res.iterations,
        "converged": res.converged,
        "residual": res.residual,
        "noise_norm": noisy.noise_norm,
        "relative_error": aligned_distance(&res.x_hat, &x0).map_err(err)? / x0.norm2(),
        "dist_matrix": dist_matrix(&res.x_hat, &x0).map_err(err)?,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn curve_tracks_the_closed_form() {
        let rows: Value = serde_json::from_str(&lemma22_curve(5, 20_000, 1).unwrap()).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 5);
        for r in rows {
            let t = r["t"].as_f64().unwrap();
            assert!((r["closed_form"].as_f64().unwrap() - 2.0 * (1.0 + t * t) / (1.0 - t)).abs() < 1e-15);
            let dev = (r["mean"].as_f64().unwrap() - r["closed_form"].as_f64().unwrap()).abs();
            assert!(dev <= 4.0 * r["stderr"].as_f64().unwrap());
        }
        assert!(lemma22_curve(1, 10, 0).is_err());
    }

    #[test]
    fn ratios_bracket_their_mean() {
        let v: Value = serde_json::from_str(&rip_ratios(16, 2, 40, 200, 3).unwrap()).unwrap();
        assert_eq!(v["ratios"].as_array().unwrap().len(), 200);
        let (lo, mean, hi) = (v["lower"].as_f64().unwrap(), v["mean"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
        assert!(0.0 < lo && lo <= mean && mean <= hi);
        assert!(rip_ratios(16, 20, 40, 10, 3).is_err());
    }

    #[test]
    fn recovery_demo_reports_the_run() {
        let v: Value = serde_json::from_str(&recover_demo(32, 2, 200, 0.0, 4).unwrap()).unwrap();
        assert_eq!(v["x_hat"].as_array().unwrap().len(), 32);
        assert!(v["relative_error"].as_f64().unwrap() <= 1e-5);
        assert!(recover_demo(100_000, 2, 100, 0.0, 0).is_err());
    }
}
