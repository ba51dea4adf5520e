mod common;

use common::{series_j, series_tail};
use freqbin_core::bessel::{bessel_j, BesselTable};
use freqbin_core::modulator::{sideband_coefficient, sideband_spectrum, ModulatorSettings};
use proptest::prelude::*;

#[test]
fn oracle_j0_at_two() {
    let oracle = series_j(0, 2.0);
    assert!((oracle - 0.223_891).abs() < 1e-6);
    assert!((bessel_j(0, 2.0).unwrap() - oracle).abs() < 1e-14);
}

#[test]
fn matches_power_series() {
    let mut worst: f64 = 0.0;
    for p in -15..=15 {
        for k in 0..=200 {
            let x = k as f64 * 0.05;
            let err = (bessel_j(p, x).unwrap() - series_j(p, x)).abs();
            worst = worst.max(err);
        }
    }
    assert!(worst <= 1e-12, "max deviation {worst:e}");
}

#[test]
fn three_term_recurrence() {
    for &x in &[0.1, 0.5, 1.0, 2.74, 5.48, 10.0] {
        for p in -20..=20 {
            let lhs = bessel_j(p - 1, x).unwrap() + bessel_j(p + 1, x).unwrap();
            let rhs = 2.0 * p as f64 / x * bessel_j(p, x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9, "p = {p}, x = {x}");
        }
    }
}

#[test]
fn order_parity_is_exact() {
    for &x in &[0.3, 2.74, 17.0, -4.2, 49.9] {
        for p in 0..30 {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(bessel_j(-p, x).unwrap(), sign * bessel_j(p, x).unwrap());
        }
    }
}

#[test]
fn sum_rule_converges() {
    for &x in &[0.0f64, 0.5, 2.74, 10.0, 25.0, 50.0] {
        let order = x.ceil() as usize + 20;
        let table = BesselTable::new(order, x).unwrap();
        let total: f64 = (-(order as i64)..=order as i64)
            .map(|p| table.get(p).powi(2))
            .sum();
        assert!((total - 1.0).abs() <= 1e-12, "x = {x}: {total}");
    }
}

#[test]
fn large_order_stays_accurate() {
    // J_n(x) for n >> x from the series, where it converges quickly
    for &(n, x) in &[(30, 1.0), (40, 5.0), (25, 2.74)] {
        let got = bessel_j(n, x).unwrap();
        let expect = series_j(n, x);
        assert!(((got - expect) / expect).abs() < 1e-10, "J_{n}({x})");
    }
}

#[test]
fn sideband_first_order_phase() {
    let s = ModulatorSettings::new(2.74, 0.0).unwrap();
    let u = sideband_coefficient(&s, 1).unwrap().value;
    let j1 = series_j(1, 2.74);
    // J_1(a) e^{-iπ/2}
    assert!(u.re.abs() < 1e-15);
    assert!((u.im + j1).abs() < 1e-13);
}

#[test]
fn eleven_peaks_at_full_drive() {
    let spec = sideband_spectrum(&ModulatorSettings::new(2.74, 0.0).unwrap(), 5).unwrap();
    assert_eq!(spec.len(), 11);
    assert!(spec.iter().all(|&(_, w)| w > 0.0));
    assert_eq!(spec.first().unwrap().0, -5);
    assert_eq!(spec.last().unwrap().0, 5);
}

#[test]
fn spectrum_sum_rule() {
    let spec = sideband_spectrum(&ModulatorSettings::new(1.0, 0.3).unwrap(), 10).unwrap();
    let total: f64 = spec.iter().map(|&(_, w)| w).sum();
    let oracle: f64 = (-10..=10).map(|p| series_j(p, 1.0).powi(2)).sum();
    assert!((1.0 - 1e-10..=1.0 + 1e-12).contains(&total));
    assert!((total - oracle).abs() < 1e-13);
    assert!(series_tail(1.0, 10) < 1e-10);
}

proptest! {
    #[test]
    fn coefficient_modulus_ignores_rf_phase(a in 0.0f64..6.0, phase in -10.0f64..10.0, p in -12i32..=12) {
        let s0 = ModulatorSettings::new(a, 0.0).unwrap();
        let s1 = ModulatorSettings::new(a, phase).unwrap();
        let m0 = sideband_coefficient(&s0, p).unwrap().value.norm();
        let m1 = sideband_coefficient(&s1, p).unwrap().value.norm();
        prop_assert!((m0 - m1).abs() < 1e-15);
        prop_assert!(m1 <= 1.0);
    }

    #[test]
    fn spectrum_never_exceeds_unity(a in 0.0f64..8.0, order in 1usize..30) {
        let spec = sideband_spectrum(&ModulatorSettings::new(a, 0.0).unwrap(), order).unwrap();
        let total: f64 = spec.iter().map(|&(_, w)| w).sum();
        prop_assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn recurrence_holds_off_grid(x in 0.05f64..50.0, p in -30i32..30) {
        let lhs = bessel_j(p - 1, x).unwrap() + bessel_j(p + 1, x).unwrap();
        let rhs = 2.0 * p as f64 / x * bessel_j(p, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + p.abs() as f64 / x));
    }
}
