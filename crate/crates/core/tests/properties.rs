use cpr_core::bounds::{h_function, lemma32_check};
use cpr_core::decompose::{decompose, verify_certificate};
use cpr_core::solver::hard_threshold;
use cpr_core::{
    aligned_distance, apply_map_matrix, apply_map_signal, dist_matrix, lift, phase_align, sample_ensemble,
    Complex64, ComplexVector, HermitianMatrix,
};
use proptest::prelude::*;

fn complex_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn pair(len: std::ops::Range<usize>) -> impl Strategy<Value = (ComplexVector, ComplexVector)> {
    len.prop_flat_map(|n| (complex_vec(n..n + 1), complex_vec(n..n + 1)))
        .prop_map(|(a, b)| (ComplexVector::new(a).unwrap(), ComplexVector::new(b).unwrap()))
}

/// `(v, s, theta)` inside the decomposition hypotheses.
fn decompose_input() -> impl Strategy<Value = (Vec<f64>, usize, f64)> {
    (1usize..=50, 0.1..10.0f64).prop_flat_map(|(dim, theta)| {
        (
            prop::collection::vec(prop_oneof![Just(0.0), -1.0..=1.0f64], dim),
            1..=dim,
            Just(theta),
            0.3..=1.0f64,
        )
            .prop_map(|(unit, s, theta, fill)| {
                let mut v: Vec<f64> = unit.iter().map(|u| u * theta).collect();
                let l1: f64 = v.iter().map(|x| x.abs()).sum();
                let cap = s as f64 * theta * fill;
                if l1 > cap {
                    v.iter_mut().for_each(|x| *x *= cap / l1);
                }
                (v, s, theta)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn phase_alignment_is_optimal((x, r) in pair(1..12), theta in 0.0..std::f64::consts::TAU) {
        let best = aligned_distance(&x, &r).unwrap();
        let other = x.scale(Complex64::from_polar(1.0, theta)).sub(&r).unwrap().norm2();
        prop_assert!(best <= other + 1e-12 * (1.0 + other));
        let (aligned, c) = phase_align(&x, &r).unwrap();
        prop_assert!((c.norm() - 1.0).abs() < 1e-12);
        let p = cpr_core::algebra::inner(aligned.as_slice(), r.as_slice());
        prop_assert!(p.re >= -1e-9 && p.im.abs() <= 1e-9 * (1.0 + p.norm()));
    }

    #[test]
    fn matrix_distance_ignores_global_phase((x, y) in pair(1..10), theta in 0.0..std::f64::consts::TAU) {
        let c = Complex64::from_polar(1.0, theta);
        let d0 = dist_matrix(&x, &y).unwrap();
        let d1 = dist_matrix(&x.scale(c), &y).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
    }

    #[test]
    fn lifted_map_is_linear((x, y) in pair(1..8), alpha in -3.0..3.0f64, beta in -3.0..3.0f64, seed in 0u64..1000) {
        let n = x.len();
        let e = sample_ensemble(n, 15, seed).unwrap();
        let (lx, ly) = (lift(&x), lift(&y));
        let combo = lx.scale(alpha).add(&ly.scale(beta)).unwrap();
        let lhs = apply_map_matrix(&e, &combo).unwrap();
        let ax = apply_map_matrix(&e, &lx).unwrap();
        let ay = apply_map_matrix(&e, &ly).unwrap();
        for j in 0..15 {
            let rhs = alpha * ax[j] + beta * ay[j];
            prop_assert!((lhs[j] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
        let direct = apply_map_signal(&e, &x).unwrap();
        for j in 0..15 {
            prop_assert!((direct[j] - ax[j]).abs() <= 1e-9 * (1.0 + ax[j].abs()));
        }
    }

    #[test]
    fn decomposition_is_complete((v, s, theta) in decompose_input()) {
        let cert = decompose(&v, s, theta).unwrap();
        let report = verify_certificate(&cert);
        prop_assert!(report.ok, "{:?}", report.violation);
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        for u in &cert.atoms {
            for (a, b) in u.iter().zip(&v) {
                prop_assert!(*b != 0.0 || *a == 0.0);
            }
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= (l1 * theta).sqrt() + 1e-8);
        }
    }

    #[test]
    fn rank_one_distance_inequality((x, y) in pair(1..20)) {
        let (y, _) = phase_align(&y, &x).unwrap();
        for (a, b) in [(&x, &y), (&y, &x)] {
            let check = lemma32_check(a, b).unwrap();
            prop_assert!(check.holds, "slack {}", check.slack());
        }
    }

    #[test]
    fn h_is_nonnegative(a in 0.0..3.0f64, b in 0.0..3.0f64, t in 0.0..=1.0f64) {
        prop_assert!(h_function(a, b, t).unwrap() >= -1e-12);
    }

    #[test]
    fn hard_threshold_keeps_the_largest(v in complex_vec(1..30), k in 1usize..10) {
        let out = hard_threshold(&v, k);
        let kept: Vec<usize> = (0..v.len()).filter(|&i| out[i] != Complex64::new(0.0, 0.0)).collect();
        prop_assert!(kept.len() <= k);
        let smallest_kept = kept.iter().map(|&i| v[i].norm_sqr()).fold(f64::INFINITY, f64::min);
        for i in 0..v.len() {
            if out[i] == Complex64::new(0.0, 0.0) && v[i] != Complex64::new(0.0, 0.0) && kept.len() == k {
                prop_assert!(v[i].norm_sqr() <= smallest_kept);
            }
            prop_assert!(out[i] == Complex64::new(0.0, 0.0) || out[i] == v[i]);
        }
    }

    #[test]
    fn hermitian_eigenvalues_sum_to_trace((x, y) in pair(1..6), alpha in -2.0..2.0f64) {
        let m: HermitianMatrix = lift(&x).add(&lift(&y).scale(alpha)).unwrap();
        let ev = m.eigenvalues();
        let sum: f64 = ev.iter().sum();
        prop_assert!((sum - m.trace()).abs() <= 1e-9 * (1.0 + m.trace().abs()));
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn near_cap_coordinates_do_not_overfill_an_atom() {
    let v = [
        -1.3673886426520032,
        0.0,
        -2.5167444713500244,
        2.1380084522357437,
        -0.04334035135698256,
        0.0,
        -1.0436293065198397,
    ];
    let cert = decompose(&v, 3, 3.744254187429548).unwrap();
    let report = verify_certificate(&cert);
    assert!(report.ok, "{:?}", report.violation);
}

#[test]
fn leftover_mass_does_not_add_a_coordinate() {
    let v = [
        0.4458193208371761,
        -0.3840729988116124,
        -0.4794625968820707,
        -0.552549399775898,
        1.40705919060701,
        -0.07084384532523973,
        0.25304067535766017,
        -0.8046210842876192,
        1.027596449504216,
        -0.5081994334022615,
        0.12347341643296639,
        0.271153722742873,
        1.423901252248237,
        0.8527981406989924,
    ];
    let cert = decompose(&v, 6, 1.434098587818972).unwrap();
    let report = verify_certificate(&cert);
    assert!(report.ok, "{:?}", report.violation);
}
