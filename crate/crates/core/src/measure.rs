//! Complex Gaussian measurement ensembles, the quadratic measurement map and
//! bounded noise.
//!
//! Entries of every measurement vector have independent real and imaginary
//! parts drawn from `N(0, 1/2)`, so `E|a_ji|^2 = 1`. Normals come from the
//! ziggurat sampler of `rand_distr::StandardNormal` scaled by `sqrt(1/2)`.
//! Vector `j` is drawn from its own ChaCha8 stream, so an ensemble can be
//! regenerated row by row in any order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_dims, inner, ComplexVector, HermitianMatrix, SparseSupport};
use crate::error::{Error, Result};
use crate::map_indices;
use crate::rng::{self, domain};

/// Generator id recorded for seeded ensembles.
pub const GENERATOR_ID: &str = "chacha8-ziggurat-v1";
/// Generator id recorded for ensembles built from explicit vectors.
pub const EXPLICIT_ID: &str = "explicit";

/// Largest tolerated imaginary part of `a* X a`, relative to `1 + |Re|`.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;

const BINARY_MAGIC: &[u8; 8] = b"CPRENS\x00\x01";

/// `m` measurement vectors of length `n`, stored row-major.
#[derive(Clone, PartialEq)]
pub struct MeasurementEnsemble {
    n: usize,
    m: usize,
    seed: u64,
    generator: String,
    rows: Vec<Complex64>,
}

impl std::fmt::Debug for MeasurementEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasurementEnsemble")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("seed", &self.seed)
            .field("generator", &self.generator)
            .finish_non_exhaustive()
    }
}

/// One complex Gaussian vector with `N(0, 1/2) + N(0, 1/2) i` entries.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// Draws an ensemble of `m` complex Gaussian vectors in `C^n`.
pub fn sample_ensemble(n: usize, m: usize, seed: u64) -> Result<MeasurementEnsemble> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("ensemble needs n, m >= 1 (got n={n}, m={m})")));
    }
    let rows = map_indices(m, |j| {
        let mut rng = rng::stream(seed, domain::ENSEMBLE, j as u64);
        gaussian_vector(&mut rng, n)
    });
    Ok(MeasurementEnsemble {
        n,
        m,
        seed,
        generator: GENERATOR_ID.to_string(),
        rows: rows.into_iter().flatten().collect(),
    })
}

impl MeasurementEnsemble {
    /// Ensemble from explicit vectors, e.g. to inject basis vectors in tests.
    pub fn from_vectors(vectors: &[ComplexVector]) -> Result<Self> {
        let first = vectors.first().ok_or(Error::Empty)?;
        let n = first.len();
        let mut rows = Vec::with_capacity(n * vectors.len());
        for v in vectors {
            check_dims(n, v.len())?;
            rows.extend_from_slice(v.as_slice());
        }
        Ok(Self {
            n,
            m: vectors.len(),
            seed: 0,
            generator: EXPLICIT_ID.to_string(),
            rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    /// Measurement vector `a_j`.
    pub fn vector(&self, j: usize) -> &[Complex64] {
        &self.rows[j * self.n..(j + 1) * self.n]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[Complex64]> {
        self.rows.chunks_exact(self.n)
    }

    /// `A x` with rows `a_j*`, i.e. the vector of `<a_j, x>`.
    pub fn linear(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.vectors().map(|a| inner(a, x)).collect()
    }

    /// Same as [`Self::linear`] but only touching the entries in `support`.
    pub fn linear_on(&self, x: &[Complex64], support: &[usize]) -> Vec<Complex64> {
        self.vectors()
            .map(|a| support.iter().map(|&i| a[i].conj() * x[i]).sum())
            .collect()
    }
}

/// `A(X) = (a_j* X a_j)_j`.
pub fn apply_map_matrix(ensemble: &MeasurementEnsemble, x: &HermitianMatrix) -> Result<Vec<f64>> {
    check_dims(ensemble.n, x.n())?;
    map_indices(ensemble.m, |j| {
        let q = x.quadratic_form(ensemble.vector(j));
        if q.im.abs() > IMAGINARY_RESIDUE_TOL * (1.0 + q.re.abs()) {
            return Err(Error::ImaginaryResidue { index: j, residue: q.im });
        }
        Ok(q.re)
    })
    .into_iter()
    .collect()
}

/// `A(x) = (|<a_j, x>|^2)_j`.
pub fn apply_map_signal(ensemble: &MeasurementEnsemble, x: &ComplexVector) -> Result<Vec<f64>> {
    check_dims(ensemble.n, x.len())?;
    Ok(ensemble
        .vectors()
        .map(|a| inner(a, x.as_slice()).norm_sqr())
        .collect())
}

/// How the noise vector `w` is generated; every kind satisfies `|w|_2 = epsilon`
/// (or `w = 0` for `None`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Standard Gaussian direction rescaled to norm `epsilon`.
    GaussianRescaled,
    /// `w = epsilon * clean / |clean|`.
    AdversarialSphere,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "gaussian_rescaled" | "gaussian" => Ok(Self::GaussianRescaled),
            "adversarial_sphere" | "adversarial" => Ok(Self::AdversarialSphere),
            other => Err(Error::InvalidParameter(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Noisy phaseless measurements `y = A(x0) + w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyMeasurements {
    pub y: Vec<f64>,
    pub epsilon: f64,
    pub noise_kind: NoiseKind,
    /// Realized `|w|_2`.
    pub noise_norm: f64,
}

pub fn add_noise(clean: &[f64], epsilon: f64, kind: NoiseKind, seed: u64) -> Result<NoisyMeasurements> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level must be finite and >= 0, got {epsilon}")));
    }
    let m = clean.len();
    let w: Vec<f64> = if epsilon == 0.0 || kind == NoiseKind::None {
        vec![0.0; m]
    } else {
        let direction: Vec<f64> = match kind {
            NoiseKind::GaussianRescaled => {
                let mut rng = rng::stream(seed, domain::NOISE, 0);
                (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
            NoiseKind::AdversarialSphere => {
                if clean.iter().all(|&c| c == 0.0) {
                    vec![1.0; m]
                } else {
                    clean.to_vec()
                }
            }
            NoiseKind::None => unreachable!(),
        };
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        direction.iter().map(|d| d * epsilon / norm).collect()
    };
    let noise_norm = w.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(NoisyMeasurements {
        y: clean.iter().zip(&w).map(|(c, d)| c + d).collect(),
        epsilon,
        noise_kind: if epsilon == 0.0 { NoiseKind::None } else { kind },
        noise_norm,
    })
}

/// Random `k`-sparse unit-norm signal: uniform support, complex Gaussian
/// values on the support.
pub fn sample_sparse_signal(n: usize, k: usize, seed: u64) -> Result<(ComplexVector, SparseSupport)> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n (k={k}, n={n})")));
    }
    let mut rng = rng::stream(seed, domain::SIGNAL, 0);
    let support = SparseSupport::new(index::sample(&mut rng, n, k).into_vec(), n)?;
    let values = gaussian_vector(&mut rng, k);
    let norm = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (&i, v) in support.indices().iter().zip(&values) {
        x[i] = v / norm;
    }
    Ok((ComplexVector::new(x)?, support))
}

/// On-disk encoding of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleFormat {
    Json,
    Binary,
}

#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    n: usize,
    m: usize,
    seed: u64,
    generator: String,
    /// Row-major, interleaved real/imaginary parts.
    data: Vec<f64>,
}

impl MeasurementEnsemble {
    fn interleaved(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().flat_map(|z| [z.re, z.im])
    }

    fn from_parts(n: usize, m: usize, seed: u64, generator: String, data: &[f64]) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Format(format!("invalid shape n={n}, m={m}")));
        }
        let expected = n
            .checked_mul(m)
            .and_then(|v| v.checked_mul(2))
            .ok_or_else(|| Error::Format("shape overflow".into()))?;
        if data.len() != expected {
            return Err(Error::Format(format!("expected {expected} floats, found {}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        let rows = data.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(Self { n, m, seed, generator, rows })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnsembleJson {
            n: self.n,
            m: self.m,
            seed: self.seed,
            generator: self.generator.clone(),
            data: self.interleaved().collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnsembleJson = serde_json::from_str(text)?;
        Self::from_parts(doc.n, doc.m, doc.seed, doc.generator, &doc.data)
    }

    /// Little-endian binary: magic, `n`, `m`, `seed` as u64, generator id as
    /// u32 length plus UTF-8 bytes, then `2 n m` f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.generator.len() as u32).to_le_bytes())?;
        w.write_all(self.generator.as_bytes())?;
        for v in self.interleaved() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let n = next_u64(&mut r)? as usize;
        let m = next_u64(&mut r)? as usize;
        let seed = next_u64(&mut r)?;
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut gen = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut gen)?;
        let generator = String::from_utf8(gen).map_err(|e| Error::Format(e.to_string()))?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if rest.len() % 8 != 0 {
            return Err(Error::Format("truncated payload".into()));
        }
        let data: Vec<f64> = rest
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_parts(n, m, seed, generator, &data)
    }

    pub fn save(&self, path: &Path, format: EnsembleFormat) -> Result<()> {
        match format {
            EnsembleFormat::Json => fs::write(path, self.to_json()?)?,
            EnsembleFormat::Binary => {
                let mut buf = Vec::with_capacity(48 + 16 * self.rows.len());
                self.write_binary(&mut buf)?;
                fs::write(path, buf)?;
            }
        }
        Ok(())
    }

    /// Loads either format, detected from the leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format(e.to_string()))?;
            Self::from_json(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::lift;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_second_moment() {
        let e = sample_ensemble(1, 1_000_000, 11).unwrap();
        let mean = e.vectors().map(|a| a[0].norm_sqr()).sum::<f64>() / 1e6;
        assert!((mean - 1.0).abs() < 0.005, "mean |a|^2 = {mean}");
    }

    #[test]
    fn real_imaginary_covariance_is_half_identity() {
        let m = 1_000_000;
        let e = sample_ensemble(2, m, 5).unwrap();
        // Coordinates: re0, im0, re1, im1.
        let mut cov = [[0.0f64; 4]; 4];
        for a in e.vectors() {
            let v = [a[0].re, a[0].im, a[1].re, a[1].im];
            for p in 0..4 {
                for q in 0..4 {
                    cov[p][q] += v[p] * v[q];
                }
            }
        }
        for p in 0..4 {
            for q in 0..4 {
                let val = cov[p][q] / m as f64;
                let target = if p == q { 0.5 } else { 0.0 };
                assert!((val - target).abs() < 0.005, "cov[{p}][{q}] = {val}");
            }
        }
    }

    #[test]
    fn seeded_ensembles_are_identical() {
        let a = sample_ensemble(3, 5, 42).unwrap();
        let b = sample_ensemble(3, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_ensemble(3, 5, 43).unwrap());
    }

    #[test]
    fn map_matrix_examples() {
        let e = sample_ensemble(4, 30, 1).unwrap();
        assert!(apply_map_matrix(&e, &HermitianMatrix::zeros(4)).unwrap().iter().all(|&v| v == 0.0));
        let id = apply_map_matrix(&e, &HermitianMatrix::identity(4)).unwrap();
        for (j, v) in id.iter().enumerate() {
            let sq: f64 = e.vector(j).iter().map(|z| z.norm_sqr()).sum();
            assert!((v - sq).abs() < 1e-12 * sq.max(1.0));
        }
        let (x, _) = sample_sparse_signal(4, 3, 9).unwrap();
        let via_matrix = apply_map_matrix(&e, &lift(&x)).unwrap();
        let via_signal = apply_map_signal(&e, &x).unwrap();
        for (p, q) in via_matrix.iter().zip(&via_signal) {
            assert!((p - q).abs() < 1e-10);
        }
        assert!(apply_map_matrix(&e, &HermitianMatrix::zeros(3)).is_err());
    }

    #[test]
    fn map_signal_examples() {
        let e = sample_ensemble(3, 10, 2).unwrap();
        assert!(apply_map_signal(&e, &ComplexVector::zeros(3)).unwrap().iter().all(|&v| v == 0.0));

        let injected = MeasurementEnsemble::from_vectors(&[
            ComplexVector::basis(2, 0),
            ComplexVector::new(vec![c(0.5, 0.5), c(-1.0, 0.0)]).unwrap(),
        ])
        .unwrap();
        let y = apply_map_signal(&injected, &ComplexVector::basis(2, 0)).unwrap();
        assert_eq!(y[0], 1.0);

        let x = ComplexVector::new(vec![c(0.2, 0.1), c(-0.3, 0.9), c(1.0, 0.0)]).unwrap();
        let rotated = x.scale(Complex64::from_polar(1.0, 0.7));
        let a = apply_map_signal(&e, &x).unwrap();
        let b = apply_map_signal(&e, &rotated).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12 * p.max(1.0));
        }
        assert!(apply_map_signal(&e, &ComplexVector::zeros(2)).is_err());
    }

    #[test]
    fn noise_examples() {
        let clean = vec![3.0, 4.0];
        let none = add_noise(&clean, 0.0, NoiseKind::GaussianRescaled, 1).unwrap();
        assert_eq!(none.y, clean);
        assert_eq!(none.noise_kind, NoiseKind::None);

        let clean: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let g = add_noise(&clean, 1.0, NoiseKind::GaussianRescaled, 1).unwrap();
        let d: f64 = g.y.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((d - 1.0).abs() < 1e-12);

        let adv = add_noise(&[3.0, 4.0], 0.5, NoiseKind::AdversarialSphere, 1).unwrap();
        assert!((adv.y[0] - 3.3).abs() < 1e-12);
        assert!((adv.y[1] - 4.4).abs() < 1e-12);

        assert!(add_noise(&clean, -0.1, NoiseKind::None, 0).is_err());
    }

    #[test]
    fn sparse_signal_shape() {
        let (x, s) = sample_sparse_signal(20, 4, 3).unwrap();
        assert_eq!(x.nnz(), 4);
        assert_eq!(x.support(), s);
        assert!((x.norm2() - 1.0).abs() < 1e-14);
        assert!(sample_sparse_signal(3, 4, 0).is_err());
    }

    #[test]
    fn file_round_trips_are_bit_exact() {
        let e = sample_ensemble(5, 7, 99).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("e.json", EnsembleFormat::Json), ("e.bin", EnsembleFormat::Binary)] {
            let p = dir.path().join(name);
            e.save(&p, fmt).unwrap();
            let back = MeasurementEnsemble::load(&p).unwrap();
            assert_eq!(back.n(), 5);
            assert_eq!(back.generator(), GENERATOR_ID);
            for (a, b) in e.rows.iter().zip(&back.rows) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        let mut buf = Vec::new();
        sample_ensemble(2, 2, 1).unwrap().write_binary(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(MeasurementEnsemble::read_binary(buf.as_slice()).is_err());
        assert!(MeasurementEnsemble::from_json(r#"{"n":2,"m":1,"seed":0,"generator":"x","data":[1.0]}"#).is_err());
    }
}
