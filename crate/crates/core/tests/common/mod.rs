//! Reference implementations that share no code with the library.

#![allow(dead_code)]

/// `J_n(x)` from the ascending power series
/// `Σ_k (−1)^k (x/2)^{2k+n} / (k! (k+n)!)`, summed with Neumaier
/// compensation until the terms stop contributing.
pub fn series_j(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs() as u64;
    let half = x / 2.0;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut k = 0u64;
    loop {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        k += 1;
        let next = -term * half * half / (k as f64 * (k + n) as f64);
        if next.abs() < 1e-300 || (k > 10 && next.abs() < 1e-18 * (sum + comp).abs().max(1e-300)) {
            break;
        }
        term = next;
    }
    let value = sum + comp;
    if order < 0 && n % 2 == 1 {
        -value
    } else {
        value
    }
}

/// `2 Σ_{p > order} J_p(x)²` from the series oracle.
pub fn series_tail(x: f64, order: usize) -> f64 {
    (order + 1..order + 80)
        .map(|p| series_j(p as i32, x).powi(2))
        .sum::<f64>()
        * 2.0
}

pub const AMPLITUDES: [f64; 6] = [0.0, 0.51, 1.01, 1.5, 1.95, 2.74];

/// `Δ ∈ {0, π/4, …, 2π}`
pub fn phase_grid() -> Vec<f64> {
    (0..=8)
        .map(|k| k as f64 * std::f64::consts::FRAC_PI_4)
        .collect()
}
