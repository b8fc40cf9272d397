mod common;

use common::*;
use echo_qram::oracle::{transfer_oracle, OracleOptions};
use echo_qram::transfer::{
    cardano, characteristic_roots, normalization, response_kernel, transfer_efficiency, RootStructure, SelfMode,
};
use echo_qram::TransferConfig;
use num_complex::Complex64;
use proptest::prelude::*;

fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|r| (r - z).norm()).fold(f64::INFINITY, f64::min)
}

/// `Phi(tau)` from the companion roots.
fn phi_ref(roots: &[Complex64], delta: f64, tau: f64) -> f64 {
    let mut sum = c(0.0, 0.0);
    for (m, &z) in roots.iter().enumerate() {
        let dp: Complex64 = roots
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != m)
            .map(|(_, &w)| z - w)
            .product();
        sum += c(0.0, 1.0) * (z + c(0.0, delta)) * (c(0.0, -1.0) * z * tau).exp() / dp;
    }
    sum.re
}

/// Transfer efficiency assembled from the companion roots and direct quadratures.
fn q1_ref(delta: f64, omega0: f64, omega1: f64) -> f64 {
    let roots = companion_roots(delta, omega0, omega1);
    let slowest = roots.iter().map(|z| -z.im).fold(f64::INFINITY, f64::min);
    let window = 40.0 / slowest;
    let p1 = integrate(|t| phi_ref(&roots, delta, t).powi(2), 0.0, window, 4000);
    let k = k_by_quadrature(delta, omega0, omega1);
    2.0 * delta / k * (omega0 * omega1 * p1).powi(2)
}

#[test]
fn roots_match_companion_eigenvalues() {
    for (d, w0, w1) in [(1.0, 1.0, 0.3), (6.0, 1.0, 0.3), (0.2, 1.0, 1.0), (3.0, 0.5, 0.05)] {
        let cfg = TransferConfig::new(d, w0, w1).unwrap();
        let reference = companion_roots(d, w0, w1);
        for z in characteristic_roots(&cfg).unwrap().nu {
            assert!(nearest(z, &reference) < 1e-11, "{d} {w0} {w1}: {z}");
        }
        for z in cardano(&cfg).roots {
            assert!(nearest(z, &reference) < 1e-9, "closed form {d}: {z}");
        }
    }
}

#[test]
fn root_structure_follows_broadening() {
    let narrow = characteristic_roots(&TransferConfig::reference(1.0)).unwrap();
    assert!(matches!(narrow.structure, RootStructure::MirrorPair { .. }));
    let wide = characteristic_roots(&TransferConfig::new(3.0, 1.42, 0.1).unwrap()).unwrap();
    assert!(matches!(wide.structure, RootStructure::Imaginary));
    assert!(wide.nu.iter().all(|z| z.re.abs() < 1e-12));
}

#[test]
fn kernel_matches_direct_fourier_transform() {
    for d in [1.0, 6.0] {
        let cfg = TransferConfig::reference(d);
        let roots = characteristic_roots(&cfg).unwrap();
        let companion = companion_roots(d, 1.0, 0.3);
        for tau in [0.5, 2.0, 7.0] {
            let lib = response_kernel(&roots, tau).unwrap();
            let fourier = kernel_by_fourier(d, 1.0, 0.3, tau);
            assert!((lib - fourier).norm() < 1e-6, "D {d} tau {tau}: {lib} vs {fourier}");
            assert!((lib - kernel_from_roots(&companion, d, tau)).norm() < 1e-12);
        }
        assert_eq!(response_kernel(&roots, -1.0).unwrap(), c(0.0, 0.0));
    }
}

#[test]
fn normalization_sum_matches_quadrature() {
    for (d, w0, w1) in [(1.0, 1.0, 0.3), (5.5, 1.0, 0.3), (2.0, 0.7, 0.7), (0.4, 1.0, 0.1)] {
        let cfg = TransferConfig::new(d, w0, w1).unwrap();
        let roots = characteristic_roots(&cfg).unwrap();
        let k = normalization(&cfg, &roots).unwrap().k;
        let reference = k_by_quadrature(d, w0, w1);
        assert!((k - reference).abs() < 1e-8 * reference, "D {d}: {k} vs {reference}");
    }
}

#[test]
fn closed_form_mode_matches_residue_sum() {
    let mode = SelfMode::new(&TransferConfig::reference(1.0)).unwrap();
    for k in 0..=40 {
        let tau = 0.25 * k as f64;
        let cf = mode.phi_closed_form(tau).expect("mirror pair at D = 1");
        assert!((cf - mode.phi(tau)).abs() < 1e-12, "tau {tau}");
    }
}

#[test]
fn mode_value_at_origin() {
    // Phi(0) = i sum (nu + iD) / P'(nu) = 0: the mode starts from rest.
    for d in [0.5, 1.0, 6.0] {
        let mode = SelfMode::new(&TransferConfig::reference(d)).unwrap();
        let roots = companion_roots(d, 1.0, 0.3);
        assert!(mode.phi(0.0).abs() < 1e-12);
        assert!(phi_ref(&roots, d, 0.0).abs() < 1e-12);
    }
}

#[test]
fn efficiency_matches_independent_assembly() {
    for d in [0.5, 1.0, 3.0, 6.0] {
        let lib = transfer_efficiency(&TransferConfig::reference(d)).unwrap().q1;
        let reference = q1_ref(d, 1.0, 0.3);
        assert!((lib - reference).abs() < 1e-7, "D {d}: {lib} vs {reference}");
    }
}

#[test]
fn oracle_efficiency_at_narrow_broadening() {
    let cfg = TransferConfig::reference(1.0);
    let analytic = transfer_efficiency(&cfg).unwrap().q1;
    let oracle = transfer_oracle(&cfg, 4001, &OracleOptions::default()).unwrap().q1;
    assert!((oracle - analytic).abs() < 0.01 * analytic, "{oracle} vs {analytic}");
}

#[test]
fn cavity_field_matches_oracle() {
    let cfg = TransferConfig::reference(6.0);
    let mode = SelfMode::new(&cfg).unwrap();
    let run = transfer_oracle(&cfg, 4001, &OracleOptions::default()).unwrap();
    let window = mode.transfer_time();
    let worst = run
        .trajectory
        .samples
        .iter()
        .map(|s| (s.field.norm() - mode.field(s.t, window).norm()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-2 * run.peak_field, "{worst} vs peak {}", run.peak_field);
}

#[test]
fn narrow_broadening_field_oscillates() {
    let mode = SelfMode::new(&TransferConfig::reference(1.0)).unwrap();
    let window = mode.transfer_time();
    let amp: Vec<f64> = (0..=20_000).map(|i| mode.field(window * i as f64 / 20_000.0, window).norm()).collect();
    let peak = amp.iter().copied().fold(0.0, f64::max);
    let maxima = amp
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > 1e-3 * peak)
        .count();
    assert!(maxima >= 2, "{maxima}");
}

#[test]
fn trivial_couplings_transfer_nothing() {
    for (w0, w1) in [(0.0, 0.3), (1.0, 0.0)] {
        let r = transfer_efficiency(&TransferConfig::new(2.0, w0, w1).unwrap()).unwrap();
        assert_eq!(r.q1, 0.0);
        assert!(SelfMode::new(&r.cfg).is_err());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(TransferConfig::new(0.0, 1.0, 0.3).is_err());
    assert!(TransferConfig::new(-1.0, 1.0, 0.3).is_err());
    assert!(TransferConfig::new(1.0, -1.0, 0.3).is_err());
    assert!(TransferConfig::new(f64::NAN, 1.0, 0.3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn efficiency_is_scale_invariant(d in 0.3f64..8.0, w1 in 0.1f64..1.0, s in 0.1f64..10.0) {
        let cfg = TransferConfig::new(d, 1.0, w1).unwrap();
        let base = transfer_efficiency(&cfg).unwrap();
        let scaled = transfer_efficiency(&cfg.scaled(s)).unwrap();
        prop_assert!((base.q1 - scaled.q1).abs() < 1e-9);
        prop_assert!((base.transfer_time / s - scaled.transfer_time).abs() < 1e-9 * base.transfer_time);
        let r0 = characteristic_roots(&cfg).unwrap().nu;
        let r1 = characteristic_roots(&cfg.scaled(s)).unwrap().nu;
        for z in r0 {
            prop_assert!(nearest(z * s, &r1) < 1e-10 * s * cfg.scale());
        }
    }

    #[test]
    fn efficiency_is_a_probability(d in 0.2f64..10.0, w1 in 0.05f64..1.0) {
        let q = transfer_efficiency(&TransferConfig::new(d, 1.0, w1).unwrap()).unwrap().q1;
        prop_assert!((0.0..=1.0 + 1e-9).contains(&q));
    }
}
