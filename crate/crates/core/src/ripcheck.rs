//! Empirical restricted isometry estimates over unit-norm, rank-2,
//! `k`-row-sparse Hermitian matrices, and Monte Carlo checks of the
//! expectation identities behind them.
//!
//! Sampled extremes are a necessary-condition check only: a band that holds
//! on every sample is evidence, never a certificate, for all of the set.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{inner, ComplexVector, HermitianMatrix, SparseSupport};
use crate::error::{Error, Result};
use crate::map_indices;
use crate::measure::{gaussian_vector, MeasurementEnsemble};
use crate::rng::{self, domain};

/// Lower RIP constant proven for order `(2, k)` with Gaussian measurements.
pub const PAPER_LOWER: f64 = 0.12;
/// Upper RIP constant proven for order `(2, k)` with Gaussian measurements.
pub const PAPER_UPPER: f64 = 2.45;
/// Bounds on `E(xi)` used inside the RIP argument.
pub const XI_LOWER: f64 = 0.57;
pub const XI_UPPER: f64 = 2.0;
/// Default `m = multiplier * k * ln(n / k)` oversampling multiplier.
pub const DEFAULT_MULTIPLIER: f64 = 6.0;

/// Gaussian blocks whose Gram-Schmidt condition estimate exceeds this are redrawn.
const MAX_BLOCK_CONDITION: f64 = 1e8;
const MC_CHUNK: usize = 1 << 16;

/// `X = lambda1 u1 u1* + lambda2 u2 u2*` with `lambda1^2 + lambda2^2 = 1`
/// and orthonormal `u1`, `u2` supported on `support`.
///
/// `u2` is absent for draws with `k = 1`, where `lambda2 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankSparseHermitian {
    pub lambda1: f64,
    pub lambda2: f64,
    pub u1: ComplexVector,
    pub u2: Option<ComplexVector>,
    pub support: SparseSupport,
}

/// Compact description of a sample, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub index: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub support: Vec<usize>,
    pub ratio: f64,
}

impl LowRankSparseHermitian {
    pub fn n(&self) -> usize {
        self.u1.len()
    }

    /// Checks the norm, orthogonality and support invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if (self.lambda1.powi(2) + self.lambda2.powi(2) - 1.0).abs() > 1e-12 {
            return fail("lambda1^2 + lambda2^2 != 1".into());
        }
        let mut vectors = vec![&self.u1];
        match &self.u2 {
            Some(u2) => {
                if u2.len() != self.n() {
                    return fail("u1 and u2 lengths differ".into());
                }
                if inner(self.u1.as_slice(), u2.as_slice()).norm() > 1e-10 {
                    return fail("u1 and u2 are not orthogonal".into());
                }
                vectors.push(u2);
            }
            None if self.lambda2 != 0.0 => return fail("lambda2 != 0 without u2".into()),
            None => {}
        }
        for u in vectors {
            if (u.norm2() - 1.0).abs() > 1e-10 {
                return fail("basis vector is not unit norm".into());
            }
            if (0..u.len()).any(|i| !self.support.contains(i) && u[i] != Complex64::new(0.0, 0.0)) {
                return fail("basis vector leaves the support".into());
            }
        }
        Ok(())
    }

    pub fn realize(&self) -> HermitianMatrix {
        realize(self)
    }

    /// `(1/m) |A(X)|_1 / |X|_F`, evaluated from the factored form.
    pub fn ratio(&self, ensemble: &MeasurementEnsemble) -> f64 {
        let s = self.support.indices();
        let project = |u: &ComplexVector, a: &[Complex64]| -> f64 {
            s.iter().map(|&i| u[i].conj() * a[i]).sum::<Complex64>().norm_sqr()
        };
        let total: f64 = ensemble
            .vectors()
            .map(|a| {
                let mut q = self.lambda1 * project(&self.u1, a);
                if let Some(u2) = &self.u2 {
                    q += self.lambda2 * project(u2, a);
                }
                q.abs()
            })
            .sum();
        total / ensemble.m() as f64 / self.lambda1.hypot(self.lambda2)
    }

    fn summary(&self, index: usize, ratio: f64) -> WitnessSummary {
        WitnessSummary {
            index,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            support: self.support.indices().to_vec(),
            ratio,
        }
    }
}

/// Dense matrix `lambda1 u1 u1* + lambda2 u2 u2*`.
pub fn realize(xp: &LowRankSparseHermitian) -> HermitianMatrix {
    let mut terms = vec![(xp.lambda1, &xp.u1)];
    if let Some(u2) = &xp.u2 {
        terms.push((xp.lambda2, u2));
    }
    HermitianMatrix::from_rank_one_terms(xp.n(), &terms).expect("basis vectors share a length")
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n (k={k}, n={n})")));
    }
    Ok(())
}

/// Orthonormal pair spanning a complex Gaussian `k x 2` block, by modified
/// Gram-Schmidt with one re-orthogonalization pass. Ill-conditioned blocks
/// are redrawn.
fn orthonormal_pair(rng: &mut ChaCha8Rng, k: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    loop {
        let mut g1 = gaussian_vector(rng, k);
        let mut g2 = gaussian_vector(rng, k);
        let r11 = g1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if r11 == 0.0 {
            continue;
        }
        g1.iter_mut().for_each(|z| *z /= r11);
        for _ in 0..2 {
            let p = inner(&g1, &g2);
            g2.iter_mut().zip(&g1).for_each(|(b, a)| *b -= a * p);
        }
        let r22 = g2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if r22 == 0.0 || r11.max(r22) / r11.min(r22) > MAX_BLOCK_CONDITION {
            continue;
        }
        g2.iter_mut().for_each(|z| *z /= r22);
        return (g1, g2);
    }
}

fn embed(values: &[Complex64], support: &SparseSupport) -> ComplexVector {
    let mut v = vec![Complex64::new(0.0, 0.0); support.n()];
    for (&i, z) in support.indices().iter().zip(values) {
        v[i] = *z;
    }
    ComplexVector::from_vec_unchecked(v)
}

fn draw(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    lambdas: Option<(f64, f64)>,
    support: Option<SparseSupport>,
) -> LowRankSparseHermitian {
    let support = support
        .unwrap_or_else(|| SparseSupport::new(index::sample(rng, n, k).into_vec(), n).expect("valid sample"));
    let (lambda1, lambda2) = lambdas.unwrap_or_else(|| {
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        (phi.cos(), phi.sin())
    });
    if k == 1 {
        let g = gaussian_vector(rng, 1)[0];
        let phase = if g.norm() > 0.0 { g / g.norm() } else { Complex64::new(1.0, 0.0) };
        let sign = if lambda1 + lambda2 >= 0.0 { 1.0 } else { -1.0 };
        return LowRankSparseHermitian {
            lambda1: sign,
            lambda2: 0.0,
            u1: embed(&[phase], &support),
            u2: None,
            support,
        };
    }
    let (b1, b2) = orthonormal_pair(rng, k);
    LowRankSparseHermitian {
        lambda1,
        lambda2,
        u1: embed(&b1, &support),
        u2: Some(embed(&b2, &support)),
        support,
    }
}

/// Draws an element of the constraint set: uniform `k`-subset support,
/// Gaussian-then-orthonormalized basis, `(lambda1, lambda2)` uniform on the
/// unit circle. `k = 1` yields `±e_i e_i*` up to phase.
pub fn sample_x(n: usize, k: usize, seed: u64) -> Result<LowRankSparseHermitian> {
    check_nk(n, k)?;
    let mut rng = rng::stream(seed, domain::X_SAMPLER, u64::MAX);
    Ok(draw(&mut rng, n, k, None, None))
}

/// Deterministic edge-case probes evaluated before random samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// `lambda = (1, 0)` on a random support.
    RankOne,
    /// `lambda2 = -lambda1`, trace zero, on a random support.
    Balanced,
    /// Rank one on the support `{0, .., k-1}`.
    RankOneLeading,
    /// Balanced sign on the support `{0, .., k-1}`.
    BalancedLeading,
    /// `lambda1 = lambda2`, on the support `{0, .., k-1}`.
    EqualLeading,
}

pub const FORCED_PROBES: [Probe; 5] = [
    Probe::RankOne,
    Probe::Balanced,
    Probe::RankOneLeading,
    Probe::BalancedLeading,
    Probe::EqualLeading,
];

/// Sample `index` of the estimator's sequence: the forced probes first, then
/// random draws. Each index has its own RNG stream.
pub fn rip_sample(n: usize, k: usize, seed: u64, index: usize) -> Result<LowRankSparseHermitian> {
    check_nk(n, k)?;
    let mut rng = rng::stream(seed, domain::X_SAMPLER, index as u64);
    let leading = || SparseSupport::leading(k, n).ok();
    let s = FRAC_1_SQRT_2;
    let xp = match FORCED_PROBES.get(index) {
        Some(Probe::RankOne) => draw(&mut rng, n, k, Some((1.0, 0.0)), None),
        Some(Probe::Balanced) => draw(&mut rng, n, k, Some((s, -s)), None),
        Some(Probe::RankOneLeading) => draw(&mut rng, n, k, Some((1.0, 0.0)), leading()),
        Some(Probe::BalancedLeading) => draw(&mut rng, n, k, Some((s, -s)), leading()),
        Some(Probe::EqualLeading) => draw(&mut rng, n, k, Some((s, s)), leading()),
        None => draw(&mut rng, n, k, None, None),
    };
    Ok(xp)
}

/// Empirical isometry ratios over a sample of the constraint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub num_samples: usize,
    /// How many of the samples were forced probes.
    pub num_forced: usize,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub mean_ratio: f64,
    pub worst_low: LowRankSparseHermitian,
    pub worst_high: LowRankSparseHermitian,
    pub witness_low: WitnessSummary,
    pub witness_high: WitnessSummary,
}

impl RipEstimate {
    pub fn spread(&self) -> f64 {
        self.upper_ratio - self.lower_ratio
    }

    pub fn inside_band(&self, lower: f64, upper: f64) -> bool {
        self.lower_ratio >= lower && self.upper_ratio <= upper
    }
}

/// Ratios `(1/m) |A(X)|_1 / |X|_F` for samples `0..num_samples`.
pub fn sample_ratios(ensemble: &MeasurementEnsemble, k: usize, num_samples: usize, seed: u64) -> Result<Vec<f64>> {
    check_nk(ensemble.n(), k)?;
    map_indices(num_samples, |i| rip_sample(ensemble.n(), k, seed, i).map(|xp| xp.ratio(ensemble)))
        .into_iter()
        .collect()
}

pub fn estimate_rip(ensemble: &MeasurementEnsemble, k: usize, num_samples: usize, seed: u64) -> Result<RipEstimate> {
    if num_samples == 0 {
        return Err(Error::InvalidParameter("num_samples must be >= 1".into()));
    }
    let ratios = sample_ratios(ensemble, k, num_samples, seed)?;
    // First index wins ties, so the reduction is independent of evaluation order.
    let mut lo = 0;
    let mut hi = 0;
    for (i, &r) in ratios.iter().enumerate() {
        if r < ratios[lo] {
            lo = i;
        }
        if r > ratios[hi] {
            hi = i;
        }
    }
    let worst_low = rip_sample(ensemble.n(), k, seed, lo)?;
    let worst_high = rip_sample(ensemble.n(), k, seed, hi)?;
    Ok(RipEstimate {
        n: ensemble.n(),
        m: ensemble.m(),
        k,
        seed,
        num_samples,
        num_forced: num_samples.min(FORCED_PROBES.len()),
        lower_ratio: ratios[lo],
        upper_ratio: ratios[hi],
        mean_ratio: ratios.iter().sum::<f64>() / num_samples as f64,
        witness_low: worst_low.summary(lo, ratios[lo]),
        witness_high: worst_high.summary(hi, ratios[hi]),
        worst_low,
        worst_high,
    })
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl MonteCarlo {
    /// `|mean - target| <= sigmas * stderr`.
    pub fn agrees_with(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.stderr
    }
}

fn monte_carlo<F>(samples: usize, seed: u64, domain: u64, draw: F) -> MonteCarlo
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial = map_indices(chunks, |c| {
        let mut rng = rng::stream(seed, domain, c as u64);
        let count = MC_CHUNK.min(samples - c * MC_CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let v = draw(&mut rng);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (s, s2) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = samples as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    MonteCarlo {
        mean,
        stderr: (var / nf).sqrt(),
        samples,
    }
}

fn check_lemma_t(t: f64) -> Result<()> {
    if !(-1.0..=0.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t must lie in [-1, 0], got {t}")));
    }
    Ok(())
}

/// `E|z1^2 + z2^2 + t z3^2 + t z4^2| = 2 (1 + t^2) / (1 - t)` for standard
/// normal `z_i` and `t` in `[-1, 0]`.
pub fn lemma22_closed_form(t: f64) -> Result<f64> {
    check_lemma_t(t)?;
    Ok(2.0 * (1.0 + t * t) / (1.0 - t))
}

/// Sample mean of `|z1^2 + z2^2 + t z3^2 + t z4^2|` with `z_i ~ N(0, 1)`.
pub fn lemma22_monte_carlo(t: f64, num_samples: usize, seed: u64) -> Result<MonteCarlo> {
    check_lemma_t(t)?;
    if num_samples < 1000 {
        return Err(Error::InvalidParameter("need at least 1000 samples".into()));
    }
    Ok(monte_carlo(num_samples, seed, domain::LEMMA22, |rng| {
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        (z[0] * z[0] + z[1] * z[1] + t * (z[2] * z[2] + z[3] * z[3])).abs()
    }))
}

/// Parameters of `xi = |lambda1| |z1^2 + z2^2 + t z3^2 + t z4^2|` with
/// `t = lambda2 / lambda1` and `lambda1^2 (1 + t^2) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCase {
    pub t: f64,
    pub lambda1_abs: f64,
}

impl ExpectationCase {
    /// The unit-norm case for a given ratio `t`.
    pub fn from_t(t: f64) -> Result<Self> {
        let case = Self {
            t,
            lambda1_abs: 1.0 / (1.0 + t * t).sqrt(),
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("{msg} ({self:?})")));
        if !(self.t.abs() <= 1.0) {
            return bad("|t| must be <= 1");
        }
        if !(FRAC_1_SQRT_2 - 1e-12..=1.0 + 1e-12).contains(&self.lambda1_abs) {
            return bad("|lambda1| must lie in [sqrt(2)/2, 1]");
        }
        if (self.lambda1_abs.powi(2) * (1.0 + self.t * self.t) - 1.0).abs() > 1e-9 {
            return bad("lambda1^2 (1 + t^2) must equal 1");
        }
        Ok(())
    }

    /// Exact `E(xi)` for `z_i ~ N(0, 1/2)`: `|lambda1| (1 + t)` when `t >= 0`,
    /// otherwise `|lambda1| (1 + t^2) / (1 - t)`.
    pub fn closed_form(&self) -> f64 {
        if self.t >= 0.0 {
            self.lambda1_abs * (1.0 + self.t)
        } else {
            self.lambda1_abs * (1.0 + self.t * self.t) / (1.0 - self.t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub case: ExpectationCase,
    pub estimate: MonteCarlo,
    pub closed_form: f64,
    /// Mean inside `[0.57 - 3 se, 2 + 3 se]`.
    pub in_bounds: bool,
}

/// Monte Carlo `E(xi)` with `z_i ~ N(0, 1/2)`, checked against `[0.57, 2]`.
pub fn xi_expectation_bounds(case: ExpectationCase, num_samples: usize, seed: u64) -> Result<XiEstimate> {
    case.validate()?;
    if num_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let ExpectationCase { t, lambda1_abs } = case;
    let estimate = monte_carlo(num_samples, seed, domain::XI, |rng| {
        // z^2 for z ~ N(0, 1/2) is half a squared standard normal.
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal).powi(2) * 0.5);
        lambda1_abs * (z[0] + z[1] + t * (z[2] + z[3])).abs()
    });
    let slack = 3.0 * estimate.stderr;
    Ok(XiEstimate {
        case,
        estimate,
        closed_form: case.closed_form(),
        in_bounds: estimate.mean >= XI_LOWER - slack && estimate.mean <= XI_UPPER + slack,
    })
}

/// `points` evenly spaced values of `t` from -1 to 1.
pub fn t_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
        .collect()
}
