//! Stable recovery of complex sparse signals from phaseless complex Gaussian
//! measurements `y_j = |<a_j, x0>|^2 + w_j`.
//!
//! The crate provides the lifted measurement map over Hermitian matrices, an
//! empirical estimator for the restricted isometry property over rank-2
//! row-sparse matrices, the convex sparse decomposition and rank-one distance
//! inequalities used in the stability argument, the stability bound formulas,
//! and a hard-thresholded gradient solver that produces recovered signals.

pub mod algebra;
pub mod bounds;
pub mod decompose;
pub mod error;
pub mod measure;
pub mod ripcheck;
pub mod rng;
pub mod solver;

pub use algebra::{
    aligned_distance, dist_matrix, frobenius_norm, lift, phase_align, row_sparsity, ComplexVector,
    HermitianMatrix, SparseSupport,
};
pub use error::{Error, Result};
pub use measure::{
    add_noise, apply_map_matrix, apply_map_signal, sample_ensemble, sample_sparse_signal,
    MeasurementEnsemble, NoiseKind, NoisyMeasurements,
};
pub use num_complex::Complex64;

/// `m = ceil(multiplier * k * ln(n / k))`, at least 1.
pub fn measurements_for(n: usize, k: usize, multiplier: f64) -> usize {
    let m = (multiplier * k as f64 * (n as f64 / k as f64).ln()).ceil();
    if m.is_finite() && m >= 1.0 {
        m as usize
    } else {
        1
    }
}

/// Order-preserving map over `0..len`, parallel when the `parallel` feature is on.
pub(crate) fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn measurement_counts() {
        assert_eq!(super::measurements_for(64, 4, 6.0), 67);
        assert_eq!(super::measurements_for(128, 5, 8.0), 130);
        assert_eq!(super::measurements_for(4, 4, 6.0), 1);
    }
}
