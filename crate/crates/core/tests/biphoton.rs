mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::{phase_grid, series_j, series_tail, AMPLITUDES};
use freqbin_core::biphoton::{
    coincidence_amplitude, coincidence_probability, distribution, effective_modulation, q,
    truncation_order, visibility, AMPLITUDE_TOLERANCE,
};
use freqbin_core::ModulatorSettings;
use num_complex::Complex64;
use proptest::prelude::*;

fn set(a: f64, phase: f64) -> ModulatorSettings {
    ModulatorSettings::new(a, phase).unwrap()
}

/// Direct double sum of the product of single-modulator sidebands.
fn oracle_amplitude(a: f64, alpha: f64, b: f64, beta: f64, d: i32) -> Complex64 {
    let u = |p: i32, x: f64, phase: f64| {
        Complex64::from_polar(series_j(p, x), p as f64 * (phase - FRAC_PI_2))
    };
    (-25..=25).map(|p| u(p, a, alpha) * u(d - p, b, beta)).sum()
}

#[test]
fn matches_direct_double_sum() {
    for &a in &AMPLITUDES {
        for &b in &AMPLITUDES {
            for (k, &delta) in phase_grid().iter().enumerate() {
                let alpha = 0.3 * k as f64;
                let beta = alpha - delta;
                for d in -6..=6 {
                    let got = coincidence_amplitude(&set(a, alpha), &set(b, beta), d).unwrap();
                    let expect = oracle_amplitude(a, alpha, b, beta, d);
                    assert!((got - expect).norm() < 1e-10, "a={a} b={b} Δ={delta} d={d}");
                }
            }
        }
    }
}

#[test]
fn distribution_is_normalized() {
    for &a in &AMPLITUDES {
        for &b in &AMPLITUDES {
            for &delta in &phase_grid() {
                let dist = distribution(&set(a, 0.0), &set(b, -delta), 40).unwrap();
                assert!((dist.total() - 1.0).abs() <= 1e-12, "a={a} b={b} Δ={delta}");
                assert!(dist.diagnostic().is_none());
            }
        }
    }
}

#[test]
fn bin_reflection_symmetry() {
    for &a in &AMPLITUDES {
        for &b in &AMPLITUDES {
            for &delta in &phase_grid() {
                for d in 1..=8 {
                    let plus = q(a, b, delta, d).unwrap();
                    let minus = q(a, b, delta, -d).unwrap();
                    assert!((plus - minus).abs() <= 1e-14);
                }
            }
        }
    }
}

#[test]
fn closed_form_for_central_bin() {
    for &a in &AMPLITUDES {
        for &b in &AMPLITUDES {
            for &delta in &phase_grid() {
                let c = (a * a + b * b + 2.0 * a * b * delta.cos()).max(0.0).sqrt();
                let expect = series_j(0, c).powi(2);
                assert!((q(a, b, delta, 0).unwrap() - expect).abs() < 1e-12);
                for d in 1..=6 {
                    let oracle = series_j(d, c).powi(2);
                    assert!((q(a, b, delta, d).unwrap() - oracle).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn effective_amplitude_extremes() {
    assert!((effective_modulation(1.0, 1.5, 0.0).amplitude - 2.5).abs() < 1e-15);
    assert!((effective_modulation(1.0, 1.5, PI).amplitude - 0.5).abs() < 1e-15);
    assert_eq!(effective_modulation(2.74, 2.74, PI).amplitude, 0.0);
}

#[test]
fn truncation_meets_tail_bound() {
    let p = truncation_order(2.74, 2.74, AMPLITUDE_TOLERANCE).unwrap();
    assert!(p >= 6);
    for x in [2.74, 5.48] {
        assert!(series_tail(x, p) < AMPLITUDE_TOLERANCE, "x = {x}");
    }
    // one order less must fail for at least one argument
    assert!([2.74, 5.48]
        .iter()
        .any(|&x| series_tail(x, p - 1) >= AMPLITUDE_TOLERANCE));
}

#[test]
fn visibility_against_oracle() {
    let report = visibility(0.5, 0.5).unwrap();
    let q_max = series_j(0, 0.0).powi(2);
    let q_min = series_j(0, 1.0).powi(2);
    let expect = (q_max - q_min) / (q_max + q_min);
    assert!((report.visibility - expect).abs() < 1e-9);
    assert!(
        (report.delta_min.rem_euclid(TAU)).abs() < 1e-4
            || (report.delta_min.rem_euclid(TAU) - TAU).abs() < 1e-4
    );
    assert!(report.diagnostic.is_some());
}

#[test]
fn full_visibility_above_first_zero() {
    for &(a, b) in &[(1.3, 1.3), (2.74, 2.74), (1.0, 2.0)] {
        let report = visibility(a, b).unwrap();
        assert!(
            report.visibility > 1.0 - 1e-9,
            "{a} {b}: {}",
            report.visibility
        );
        assert!(report.diagnostic.is_none());
    }
}

fn amplitude() -> impl Strategy<Value = f64> {
    0.0f64..3.0
}

fn phase() -> impl Strategy<Value = f64> {
    -TAU..TAU
}

proptest! {
    #[test]
    fn gauge_invariance(a in amplitude(), b in amplitude(), alpha in phase(), beta in phase(),
                        shift in phase(), d in -6i32..=6) {
        let q0 = coincidence_probability(&set(a, alpha), &set(b, beta), d).unwrap();
        let q1 = coincidence_probability(&set(a, alpha + shift), &set(b, beta + shift), d).unwrap();
        prop_assert!((q0 - q1).abs() <= 1e-12);
    }

    #[test]
    fn exchange_symmetry(a in amplitude(), b in amplitude(), delta in phase(), d in -6i32..=6) {
        let lhs = q(a, b, delta, d).unwrap();
        let rhs = q(b, a, -delta, d).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn probabilities_are_bounded(a in amplitude(), b in amplitude(), delta in phase(), d in -10i32..=10) {
        let p = q(a, b, delta, d).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn normalization_anywhere(a in amplitude(), b in amplitude(), alpha in phase(), beta in phase()) {
        let dist = distribution(&set(a, alpha), &set(b, beta), 30).unwrap();
        prop_assert!((dist.total() - 1.0).abs() <= 1e-12);
    }
}
