use cpr_core::measure::gaussian_vector;
use cpr_core::rng;
use cpr_core::solver::{gradient, objective, recover, residual_check, spectral_init, SolverConfig};
use cpr_core::{
    add_noise, apply_map_signal, dist_matrix, sample_ensemble, sample_sparse_signal, Complex64, ComplexVector,
    NoiseKind,
};

/// Central differences of the objective along each real coordinate.
fn fd_gradient(e: &cpr_core::MeasurementEnsemble, y: &[f64], x: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0); x.len()];
    for i in 0..x.len() {
        for (part, unit) in [(0, Complex64::new(h, 0.0)), (1, Complex64::new(0.0, h))] {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += unit;
            minus[i] -= unit;
            let d = (objective(e, y, &plus) - objective(e, y, &minus)) / (2.0 * h);
            if part == 0 {
                g[i].re = d;
            } else {
                g[i].im = d;
            }
        }
    }
    g
}

#[test]
fn gradient_matches_finite_differences() {
    for inst in 0..20u64 {
        let n = 2 + (inst as usize % 7);
        let m = 8 + (inst as usize % 13);
        let e = sample_ensemble(n, m, 100 + inst).unwrap();
        let mut r = rng::stream(inst, 77, 0);
        let target = ComplexVector::new(gaussian_vector(&mut r, n)).unwrap();
        let y = apply_map_signal(&e, &target).unwrap();
        let x = gaussian_vector(&mut r, n);
        let g = gradient(&e, &y, &x);
        let fd = fd_gradient(&e, &y, &x, 1e-5);
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den <= 1e-5, "instance {inst}: relative error {}", num / den);
    }
}

#[test]
fn global_phase_of_the_signal_does_not_matter() {
    let (n, k, m) = (32, 2, 300);
    let e = sample_ensemble(n, m, 8).unwrap();
    let (x0, _) = sample_sparse_signal(n, k, 9).unwrap();
    let c = Complex64::from_polar(1.0, 2.1);
    let x1 = x0.scale(c);
    let y0 = apply_map_signal(&e, &x0).unwrap();
    let y1 = apply_map_signal(&e, &x1).unwrap();
    let scale = y0.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    assert!(y0.iter().zip(&y1).all(|(a, b)| (a - b).abs() <= 1e-14 * scale));

    let cfg = SolverConfig::new(k);
    let r0 = recover(&e, &y0, &cfg).unwrap();
    let r1 = recover(&e, &y1, &cfg).unwrap();
    let d0 = dist_matrix(&r0.x_hat, &x0).unwrap();
    let d1 = dist_matrix(&r1.x_hat, &x1).unwrap();
    assert!(d0 <= 1e-8 && d1 <= 1e-8, "{d0} {d1}");
    // Identical data gives identical output.
    let again = recover(&e, &y0, &cfg).unwrap();
    assert_eq!(again.x_hat, r0.x_hat);
}

#[test]
fn spectral_support_finds_a_single_spike() {
    let (n, m) = (64, 400);
    let x0 = ComplexVector::basis(n, 0);
    let hits = (0..100u64)
        .filter(|&s| {
            let e = sample_ensemble(n, m, 1000 + s).unwrap();
            let y = apply_map_signal(&e, &x0).unwrap();
            spectral_init(&e, &y, 1).unwrap().support == vec![0]
        })
        .count();
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn noisy_recoveries_satisfy_the_data_constraint() {
    let (n, k, m, eps) = (32, 2, 300, 0.1);
    let ok = (0..20u64)
        .filter(|&s| {
            let e = sample_ensemble(n, m, 4000 + s).unwrap();
            let (x0, _) = sample_sparse_signal(n, k, 5000 + s).unwrap();
            let clean = apply_map_signal(&e, &x0).unwrap();
            let noisy = add_noise(&clean, eps, NoiseKind::GaussianRescaled, s).unwrap();
            let res = recover(&e, &noisy.y, &SolverConfig::new(k)).unwrap();
            residual_check(&e, &res.x_hat, &noisy.y, noisy.noise_norm).unwrap()
        })
        .count();
    assert!(ok >= 19, "{ok}/20");
}

#[test]
fn recovered_signals_are_k_sparse() {
    for s in 0..10u64 {
        let e = sample_ensemble(48, 60, s).unwrap();
        let (x0, _) = sample_sparse_signal(48, 4, s).unwrap();
        let y = apply_map_signal(&e, &x0).unwrap();
        let res = recover(&e, &y, &SolverConfig::new(4).with_seed(s)).unwrap();
        assert!(res.x_hat.nnz() <= 4);
        assert!(res.residual >= 0.0);
        assert!(res.objective_trace.windows(2).skip(5).all(|w| w[1] <= w[0]));
    }
}
