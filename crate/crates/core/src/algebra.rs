//! Complex vector and Hermitian matrix values, phase-invariant distances and
//! sparsity counts.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest conjugate-symmetry defect that is repaired by averaging.
pub const HERMITIAN_REPAIR_TOL: f64 = 1e-10;

/// Relative threshold below which a matrix entry counts as zero.
pub const ZERO_REL_TOL: f64 = 1e-12;

/// Dense complex vector with finite entries and length at least one.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(index) = entries.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector length must be positive");
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    /// Standard basis vector `e_i` of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_vec_unchecked(entries: Vec<Complex64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn norm2_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sqr().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).sum()
    }

    /// Number of exactly nonzero entries.
    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count()
    }

    /// Indices of exactly nonzero entries.
    pub fn support(&self) -> SparseSupport {
        SparseSupport {
            indices: (0..self.len())
                .filter(|&i| self.0[i] != Complex64::new(0.0, 0.0))
                .collect(),
            n: self.len(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<Complex64>> for ComplexVector {
    type Error = Error;

    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ComplexVector> for Vec<Complex64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

/// Strictly increasing index set inside `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseSupport {
    indices: Vec<usize>,
    n: usize,
}

impl SparseSupport {
    /// Sorts and validates `indices`; duplicates and out-of-range indices are rejected.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate support index".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::InvalidParameter(format!(
                    "support index {last} out of range for dimension {n}"
                )));
            }
        }
        Ok(Self { indices, n })
    }

    /// The first `k` indices `{0, .., k-1}`.
    pub fn leading(k: usize, n: usize) -> Result<Self> {
        Self::new((0..k).collect(), n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Dense `n x n` Hermitian matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Validates conjugate symmetry. Defects up to [`HERMITIAN_REPAIR_TOL`]
    /// (relative to the largest modulus, floor 1) are repaired by replacing
    /// the matrix with `(X + X*) / 2`; larger defects are rejected.
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        check_dims(n * n, entries.len())?;
        if let Some(index) = entries.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut deviation: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (entries[i * n + j] - entries[j * n + i].conj()).norm();
                deviation = deviation.max(d);
            }
        }
        if deviation > HERMITIAN_REPAIR_TOL * scale {
            return Err(Error::NotHermitian { deviation });
        }
        let mut m = Self { n, entries };
        m.symmetrize();
        Ok(m)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        Self {
            n,
            entries: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * n + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds `sum_r w_r v_r v_r*`. Exactly Hermitian by construction.
    pub fn from_rank_one_terms(n: usize, terms: &[(f64, &ComplexVector)]) -> Result<Self> {
        let mut m = Self::zeros(n);
        for &(w, v) in terms {
            check_dims(n, v.len())?;
            for i in 0..n {
                let vi = v[i];
                if vi == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m.entries[i * n + j] += vi * v[j].conj() * w;
                }
            }
        }
        m.symmetrize();
        Ok(m)
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            let d = self.entries[i * n + i];
            self.entries[i * n + i] = Complex64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let avg = (self.entries[i * n + j] + self.entries[j * n + i].conj()) * 0.5;
                self.entries[i * n + j] = avg;
                self.entries[j * n + i] = avg.conj();
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entries[i * self.n + i].re).sum()
    }

    /// `a* X a`, before the imaginary part is dropped.
    pub fn quadratic_form(&self, a: &[Complex64]) -> Complex64 {
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..n {
                row += self.entries[i * n + j] * a[j];
            }
            acc += a[i].conj() * row;
        }
        acc
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.entries);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Complex64]> = (0..self.n).map(|i| self.row(i)).collect();
        f.debug_struct("HermitianMatrix")
            .field("n", &self.n)
            .field("rows", &rows)
            .finish()
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `x* y = sum conj(x_i) y_i`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Number of rows holding at least one entry above the zero tolerance
/// (`1e-12` times the largest modulus in the matrix, floor `1e-300`).
pub fn row_sparsity(x: &HermitianMatrix) -> usize {
    let largest = x.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = ZERO_REL_TOL * largest.max(1e-300);
    (0..x.n)
        .filter(|&i| x.row(i).iter().any(|z| z.norm() > threshold))
        .count()
}

pub fn frobenius_norm(x: &HermitianMatrix) -> f64 {
    x.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The lift `x -> x x*`.
pub fn lift(x: &ComplexVector) -> HermitianMatrix {
    let n = x.len();
    let mut m = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.entries[i * n + j] = x[i] * x[j].conj();
        }
        m.entries[i * n + i] = Complex64::new(x[i].norm_sqr(), 0.0);
    }
    m
}

/// Rotates `x` by the unit-modulus `c` minimizing `|c x - reference|`.
///
/// When `x* reference = 0` every `c` is optimal and `c = 1` is returned.
pub fn phase_align(x: &ComplexVector, reference: &ComplexVector) -> Result<(ComplexVector, Complex64)> {
    check_dims(reference.len(), x.len())?;
    let s = inner(x.as_slice(), reference.as_slice());
    let modulus = s.norm();
    let c = if modulus == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        s / modulus
    };
    Ok((x.scale(c), c))
}

/// `min_{|c|=1} |c x - reference|_2`.
pub fn aligned_distance(x: &ComplexVector, reference: &ComplexVector) -> Result<f64> {
    let (aligned, _) = phase_align(x, reference)?;
    Ok(aligned.sub(reference)?.norm2())
}

/// `|x x* - y y*|_F`, computed without forming either lift.
pub fn dist_matrix(x: &ComplexVector, y: &ComplexVector) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x[i] * x[j].conj() - y[i] * y[j].conj()).norm_sqr();
        }
    }
    Ok(acc.sqrt())
}
