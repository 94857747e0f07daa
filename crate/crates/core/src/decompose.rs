//! Convex `s`-sparse decomposition of bounded real vectors.
//!
//! Given `|v|_inf <= theta` and `|v|_1 <= s theta`, [`decompose`] writes `v` as
//! a convex combination of `s`-sparse atoms supported inside `supp(v)` with
//! `|u|_1 <= |v|_1` and `|u|_inf <= theta`.
//!
//! Construction: strip signs and work with `w = |v|` on its support. `w` lies
//! in the polytope `{0 <= u <= cap, sum(u) = |v|_1}` whose vertices carry at
//! most one fractional coordinate and are therefore `s`-sparse. Each step
//! picks a vertex `u` of the smallest face containing the current point `z`,
//! moves `z` away from `u` until another coordinate hits a bound, and records
//! `u` with the weight that makes `z` the convex combination of `u` and the
//! new point. The face dimension drops every step, so at most `|supp(v)| + 1`
//! atoms are produced.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the input hypotheses, relative to `max(1, s theta)`.
pub const HYPOTHESIS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    pub weights: Vec<f64>,
    pub atoms: Vec<Vec<f64>>,
    pub s: usize,
    pub theta: f64,
    pub source: Vec<f64>,
}

impl DecompositionCertificate {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `sum_i weight_i atom_i`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.source.len()];
        for (w, u) in self.weights.iter().zip(&self.atoms) {
            for (o, x) in out.iter_mut().zip(u) {
                *o += w * x;
            }
        }
        out
    }
}

/// Upper limit on the number of atoms for a vector of length `dim`.
pub fn max_atoms(dim: usize) -> usize {
    4 * dim + 4
}

fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn decompose(v: &[f64], s: usize, theta: f64) -> Result<DecompositionCertificate> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if s == 0 || !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need s >= 1 and finite theta > 0 (s={s}, theta={theta})"
        )));
    }
    let budget = s as f64 * theta;
    let slack = HYPOTHESIS_SLACK * budget.max(1.0);
    let (l1, linf) = (norm1(v), norm_inf(v));
    if linf > theta + slack {
        return Err(Error::HypothesisViolated(format!("|v|_inf = {linf} exceeds theta = {theta}")));
    }
    if l1 > budget + slack {
        return Err(Error::HypothesisViolated(format!("|v|_1 = {l1} exceeds s * theta = {budget}")));
    }

    let support: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
    if support.len() <= s {
        return Ok(DecompositionCertificate {
            weights: vec![1.0],
            atoms: vec![v.to_vec()],
            s,
            theta,
            source: v.to_vec(),
        });
    }

    // Absorb the hypothesis slack so every vertex is provably s-sparse.
    let cap = theta.max(linf).max(l1 / s as f64);
    let tol = 1e-13 * cap;
    let limit = max_atoms(v.len());

    let mut z: Vec<f64> = support.iter().map(|&i| v[i].abs()).collect();
    let mut mass = 1.0;
    let mut weights = Vec::new();
    let mut atoms = Vec::new();
    let embed = |u: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; v.len()];
        for (&i, x) in support.iter().zip(u) {
            full[i] = x.copysign(v[i]);
        }
        full
    };

    loop {
        if atoms.len() >= limit {
            return Err(Error::TooManyAtoms { max: limit });
        }
        let u = face_vertex(&z, l1, cap, tol);
        let d: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        let free: Vec<usize> = (0..z.len()).filter(|&i| z[i] > tol && z[i] < cap - tol).collect();

        // Largest step away from u that keeps the free coordinates inside [0, cap].
        let mut alpha = f64::INFINITY;
        let mut blocking = None;
        for &i in &free {
            let limit_i = if d[i] > tol {
                (cap - z[i]) / d[i]
            } else if d[i] < -tol {
                z[i] / -d[i]
            } else {
                continue;
            };
            if limit_i < alpha {
                alpha = limit_i;
                blocking = Some(i);
            }
        }
        let Some(b) = blocking else {
            // z is a vertex (up to tolerance).
            weights.push(mass);
            atoms.push(embed(&u));
            break;
        };

        weights.push(mass * alpha / (1.0 + alpha));
        atoms.push(embed(&u));
        mass /= 1.0 + alpha;
        for i in 0..z.len() {
            z[i] = (z[i] + alpha * d[i]).clamp(0.0, cap);
        }
        z[b] = if d[b] > 0.0 { cap } else { 0.0 };
    }

    Ok(DecompositionCertificate {
        weights,
        atoms,
        s,
        theta,
        source: v.to_vec(),
    })
}

/// A vertex of the smallest face of `{0 <= u <= cap, sum(u) = total}` that
/// contains `z`: coordinates at a bound stay there, the remaining mass fills
/// the free coordinates in decreasing order of `z` (lowest index first on ties).
fn face_vertex(z: &[f64], total: f64, cap: f64, tol: f64) -> Vec<f64> {
    let mut u = vec![0.0; z.len()];
    let mut remaining = total;
    let mut free = Vec::new();
    for (i, &zi) in z.iter().enumerate() {
        if zi >= cap - tol {
            if remaining > tol {
                u[i] = cap.min(remaining);
                remaining -= u[i];
            }
        } else if zi > tol {
            free.push(i);
        }
    }
    free.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    for i in free {
        if remaining <= tol {
            break;
        }
        let fill = remaining.min(cap);
        u[i] = fill;
        remaining -= fill;
    }
    u
}

/// First violated certificate clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    WeightOutOfRange { index: usize, weight: f64 },
    WeightSum { sum: f64 },
    ShapeMismatch { index: usize },
    TooDense { index: usize, nnz: usize },
    LeavesSupport { index: usize, coordinate: usize },
    L1Exceeded { index: usize, norm: f64 },
    ThetaExceeded { index: usize, norm: f64 },
    ReconstructionMismatch { error: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WeightOutOfRange { index, weight } => {
                write!(f, "weight out of [0,1]: weight {index} = {weight}")
            }
            Self::WeightSum { sum } => write!(f, "weights sum to {sum}, not 1"),
            Self::ShapeMismatch { index } => write!(f, "atom {index} has the wrong length"),
            Self::TooDense { index, nnz } => write!(f, "atom {index} has {nnz} nonzeros"),
            Self::LeavesSupport { index, coordinate } => {
                write!(f, "atom {index} is nonzero at {coordinate}, outside supp(v)")
            }
            Self::L1Exceeded { index, norm } => write!(f, "atom {index} has l1 norm {norm} > |v|_1"),
            Self::ThetaExceeded { index, norm } => write!(f, "atom {index} has max entry {norm} > theta"),
            Self::ReconstructionMismatch { error } => {
                write!(f, "reconstruction mismatch: max error {error:e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub violation: Option<Violation>,
    /// `|sum_i lambda_i u_i - v|_inf`.
    pub reconstruction_error: f64,
}

pub fn verify_certificate(cert: &DecompositionCertificate) -> VerificationReport {
    let reconstruction_error = if cert.atoms.iter().all(|u| u.len() == cert.source.len()) {
        cert.reconstruct()
            .iter()
            .zip(&cert.source)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    } else {
        f64::INFINITY
    };
    let violation = first_violation(cert, reconstruction_error);
    VerificationReport {
        ok: violation.is_none(),
        violation,
        reconstruction_error,
    }
}

fn first_violation(cert: &DecompositionCertificate, reconstruction_error: f64) -> Option<Violation> {
    for (index, &weight) in cert.weights.iter().enumerate() {
        if !(0.0..=1.0).contains(&weight) {
            return Some(Violation::WeightOutOfRange { index, weight });
        }
    }
    let sum: f64 = cert.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-10 || cert.weights.len() != cert.atoms.len() {
        return Some(Violation::WeightSum { sum });
    }
    let v_l1 = norm1(&cert.source);
    for (index, u) in cert.atoms.iter().enumerate() {
        if u.len() != cert.source.len() {
            return Some(Violation::ShapeMismatch { index });
        }
        let nnz = u.iter().filter(|x| **x != 0.0).count();
        if nnz > cert.s {
            return Some(Violation::TooDense { index, nnz });
        }
        if let Some(coordinate) = (0..u.len()).find(|&i| u[i] != 0.0 && cert.source[i] == 0.0) {
            return Some(Violation::LeavesSupport { index, coordinate });
        }
        let l1 = norm1(u);
        if l1 > v_l1 + 1e-10 {
            return Some(Violation::L1Exceeded { index, norm: l1 });
        }
        let linf = norm_inf(u);
        if linf > cert.theta + 1e-10 {
            return Some(Violation::ThetaExceeded { index, norm: linf });
        }
    }
    if !(reconstruction_error <= 1e-9 * norm_inf(&cert.source).max(1.0)) {
        return Some(Violation::ReconstructionMismatch { error: reconstruction_error });
    }
    None
}
