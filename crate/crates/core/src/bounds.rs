//! Stability constants and error bounds for `l1`-constrained recovery under a
//! rank-2 RIP, and the rank-one distance inequality used to pass from matrix
//! error to vector error.

use serde::{Deserialize, Serialize};

use crate::algebra::{check_dims, inner, ComplexVector};
use crate::error::{Error, Result};

/// RIP constants `c <= C` of order `(2, 2ak)` with oversampling factor `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipConstants {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub a: f64,
    pub k: usize,
}

impl RipConstants {
    pub fn new(c: f64, big_c: f64, a: f64, k: usize) -> Result<Self> {
        if !(c > 0.0 && c <= big_c && big_c.is_finite() && a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < c <= C and a > 0 (c={c}, C={big_c}, a={a})"
            )));
        }
        Ok(Self { c, big_c, a, k })
    }

    /// `(8C/c)^2`, above which the stability condition is guaranteed.
    pub fn sufficient_a(c: f64, big_c: f64) -> f64 {
        (8.0 * big_c / c).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// `c - 4C/sqrt(a) - C/a`.
    pub margin: f64,
}

pub fn check_condition(rc: &RipConstants) -> ConditionCheck {
    let margin = rc.c - 4.0 * rc.big_c / rc.a.sqrt() - rc.big_c / rc.a;
    ConditionCheck {
        holds: margin > 0.0,
        margin,
    }
}

/// `C1 = (1/a + 4/sqrt(a) + 1) / (c - 4C/sqrt(a) - C/a)`.
pub fn c1(rc: &RipConstants) -> Result<f64> {
    let check = check_condition(rc);
    if !check.holds {
        return Err(Error::ConditionViolated { margin: check.margin });
    }
    Ok((1.0 / rc.a + 4.0 / rc.a.sqrt() + 1.0) / check.margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Bound on `|x# x#* - x0 x0*|_F`: `2 C1 eps / sqrt(m)`.
    pub matrix_bound: f64,
    /// Bound on `min_{|c|=1} |c x# - x0|_2`.
    pub vector_bound: f64,
    /// `2 sqrt(2) C1 eps / (sqrt(m) |x0|_2)`; absent when `|x0|_2 = 0`.
    pub vector_bound_norm: Option<f64>,
    /// `2 sqrt(2 sqrt(2) C1) sqrt(eps) (n/m)^(1/4)`.
    pub vector_bound_dimension: f64,
    pub epsilon: f64,
    pub m: usize,
    pub n: usize,
    pub norm_x0: f64,
}

pub fn stability_bounds(rc: &RipConstants, epsilon: f64, m: usize, n: usize, norm_x0: f64) -> Result<StabilityBound> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() || m == 0 || !(norm_x0 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need eps >= 0, m >= 1, |x0| >= 0 (eps={epsilon}, m={m}, |x0|={norm_x0})"
        )));
    }
    let c1 = c1(rc)?;
    let sqrt_m = (m as f64).sqrt();
    let matrix_bound = 2.0 * c1 * epsilon / sqrt_m;
    let vector_bound_norm = (norm_x0 > 0.0)
        .then(|| 2.0 * std::f64::consts::SQRT_2 * c1 * epsilon / (sqrt_m * norm_x0));
    let vector_bound_dimension = 2.0
        * (2.0 * std::f64::consts::SQRT_2 * c1).sqrt()
        * epsilon.sqrt()
        * (n as f64 / m as f64).powf(0.25);
    let vector_bound = vector_bound_norm.map_or(vector_bound_dimension, |b| b.min(vector_bound_dimension));
    Ok(StabilityBound {
        c1,
        matrix_bound,
        vector_bound,
        vector_bound_norm,
        vector_bound_dimension,
        epsilon,
        m,
        n,
        norm_x0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma32Check {
    /// `|x x* - y y*|_F^2`.
    pub lhs: f64,
    /// `max(|x|^2, |y|^2) |x - y|^2 / 2`.
    pub rhs: f64,
    pub holds: bool,
}

impl Lemma32Check {
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Checks `|x x* - y y*|_F^2 >= max(|x|^2, |y|^2) |x - y|^2 / 2` for
/// phase-aligned inputs, i.e. `x* y` real and non-negative.
pub fn lemma32_check(x: &ComplexVector, y: &ComplexVector) -> Result<Lemma32Check> {
    check_dims(x.len(), y.len())?;
    let p = inner(x.as_slice(), y.as_slice());
    let (a2, b2) = (x.norm2_sqr(), y.norm2_sqr());
    let scale = (a2 * b2).sqrt().max(1.0);
    if p.re < -1e-12 * scale || p.im.abs() > 1e-10 * scale {
        return Err(Error::NotPhaseAligned { re: p.re, im: p.im });
    }
    // |xx* - yy*|_F^2 = |x|^4 + |y|^4 - 2 |x* y|^2, evaluated entrywise for accuracy near x = y.
    let n = x.len();
    let mut lhs = 0.0;
    for i in 0..n {
        for j in 0..n {
            lhs += (x[i] * x[j].conj() - y[i] * y[j].conj()).norm_sqr();
        }
    }
    let diff = x.sub(y)?.norm2_sqr();
    let rhs = 0.5 * a2.max(b2) * diff;
    Ok(Lemma32Check {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10,
    })
}

fn check_h_domain(a: f64, b: f64, t: f64) -> Result<()> {
    if !(a >= 0.0 && b >= 0.0 && (0.0..=1.0).contains(&t)) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("need a, b >= 0 and t in [0, 1] (a={a}, b={b}, t={t})")));
    }
    Ok(())
}

/// `h(a, b, t) = a^4 + b^4 - 2 (ab)^2 t^2 - a^2 (a^2 + b^2 - 2abt) / 2`, the
/// gap in the rank-one inequality with `a = |x|`, `b = |y|`, `t` the cosine
/// of the angle between `x` and `y`.
pub fn h_function(a: f64, b: f64, t: f64) -> Result<f64> {
    check_h_domain(a, b, t)?;
    let ab = a * b;
    Ok(a.powi(4) + b.powi(4) - 2.0 * ab * ab * t * t - 0.5 * a * a * (a * a + b * b - 2.0 * ab * t))
}

/// Closed form of `h(a, b, 0)`: `(a^2 - b^2/2)^2 / 2 + 7 b^4 / 8`.
pub fn h_at_zero(a: f64, b: f64) -> f64 {
    0.5 * (a * a - 0.5 * b * b).powi(2) + 0.875 * b.powi(4)
}

/// Closed form of `h(a, b, 1)`: `(a - b)^2 (a^2/2 + b^2 + 2ab)`.
pub fn h_at_one(a: f64, b: f64) -> f64 {
    (a - b).powi(2) * (0.5 * a * a + b * b + 2.0 * a * b)
}
