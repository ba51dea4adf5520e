//! Bessel functions of the first kind for integer order.
//!
//! Values come from a single downward (Miller) recurrence normalized with the
//! identity `J_0(x) + 2 Σ_k J_{2k}(x) = 1`. The recurrence is stable in the
//! direction of decreasing order, so high orders keep full absolute accuracy
//! where the power series cancels catastrophically.

use alloc::vec;
use alloc::vec::Vec;
// Unused whenever std is linked into the build, which supplies the inherent methods.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest `|x|` for which accuracy has been validated.
pub const MAX_ARGUMENT: f64 = 50.0;

/// First positive zero of `J_0`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

fn check_argument(x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::BesselDomain { x });
    }
    Ok(())
}

fn start_order(max_order: usize, x: f64) -> usize {
    let scale = (max_order as f64).max(x);
    let m = scale + 30.0 + (60.0 * scale).sqrt();
    // The normalization sum needs an even starting order.
    2 * (m as usize).div_ceil(2)
}

/// `J_0(x) ..= J_{max_order}(x)` for `x >= 0`.
fn miller_table(max_order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = start_order(max_order, x);
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    for k in (1..=top).rev() {
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        let order = k - 1;
        if order <= max_order {
            out[order] = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            next *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(order) {
                *v *= RESCALE_BY;
            }
        }
    }
    norm += cur;
    for v in &mut out {
        *v /= norm;
    }
    out
}

#[inline]
fn parity(order: i64) -> f64 {
    if order.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `J_order(x)` for any integer order and `|x| <= 50`.
///
/// Negative orders and arguments are reduced with `J_{-n}(x) = (-1)^n J_n(x)`
/// and `J_n(-x) = (-1)^n J_n(x)`, so both parities hold exactly.
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    check_argument(x)?;
    let n = order.unsigned_abs() as usize;
    let mut sign = if order < 0 { parity(order as i64) } else { 1.0 };
    if x < 0.0 {
        sign *= parity(n as i64);
    }
    let table = miller_table(n, x.abs());
    Ok(sign * table[n])
}

/// Table of `J_n(x)` for every `n` in `-max_order..=max_order`.
///
/// One recurrence pass serves all orders; index with [`BesselTable::get`].
#[derive(Debug, Clone)]
pub struct BesselTable {
    x: f64,
    positive: Vec<f64>,
}

impl BesselTable {
    pub fn new(max_order: usize, x: f64) -> Result<Self> {
        check_argument(x)?;
        let mut positive = miller_table(max_order, x.abs());
        if x < 0.0 {
            for (n, v) in positive.iter_mut().enumerate() {
                *v *= parity(n as i64);
            }
        }
        Ok(Self { x, positive })
    }

    pub fn argument(&self) -> f64 {
        self.x
    }

    pub fn max_order(&self) -> usize {
        self.positive.len() - 1
    }

    /// `J_order(x)`, or zero beyond the tabulated range.
    #[inline]
    pub fn get(&self, order: i64) -> f64 {
        let n = order.unsigned_abs() as usize;
        match self.positive.get(n) {
            Some(&v) if order < 0 => parity(order) * v,
            Some(&v) => v,
            None => 0.0,
        }
    }

    /// `2 Σ_{p > order} J_p(x)^2` over the tabulated range.
    pub fn tail_mass(&self, order: usize) -> f64 {
        2.0 * self
            .positive
            .iter()
            .skip(order + 1)
            .rev()
            .map(|v| v * v)
            .sum::<f64>()
    }
}

/// Sideband order beyond which `J_p(x)` is below `1e-16`: `ceil(|x|) + 20`.
///
/// The bound holds for `|x| <= 5.48`, i.e. any phasor sum of two drives within
/// the experimentally accessible amplitude range. Larger arguments should use
/// a tolerance-driven order such as [`crate::biphoton::truncation_order`].
pub fn default_truncation(x: f64) -> usize {
    x.abs().ceil() as usize + 20
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(-3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tabulated_values() {
        // Abramowitz & Stegun, table 9.1
        let cases = [
            (0, 1.0, 0.765_197_686_557_966_6),
            (1, 1.0, 0.440_050_585_744_933_5),
            (0, 2.0, 0.223_890_779_141_235_7),
            (1, 5.0, -0.327_579_137_591_465_2),
            (2, 10.0, 0.254_630_313_685_120_7),
        ];
        for (n, x, expect) in cases {
            let got = bessel_j(n, x).unwrap();
            assert!((got - expect).abs() < 1e-14, "J_{n}({x}) = {got}");
        }
    }

    #[test]
    fn domain_error() {
        assert_eq!(bessel_j(0, 50.5), Err(Error::BesselDomain { x: 50.5 }));
        assert!(bessel_j(0, f64::NAN).is_err());
        assert!(bessel_j(0, -50.0).is_ok());
    }

    #[test]
    fn negative_argument() {
        for n in -6..=6 {
            let a = bessel_j(n, 3.3).unwrap();
            let b = bessel_j(n, -3.3).unwrap();
            assert_eq!(b, parity(n as i64) * a);
        }
    }

    #[test]
    fn table_agrees_with_pointwise() {
        let table = BesselTable::new(12, 2.74).unwrap();
        for n in -12..=12 {
            let v = bessel_j(n, 2.74).unwrap();
            assert!((table.get(n as i64) - v).abs() < 1e-15);
        }
        assert_eq!(table.get(40), 0.0);
    }

    #[test]
    fn tiny_argument_high_order() {
        let v = bessel_j(30, 1e-8).unwrap();
        assert!(v.abs() < 1e-200);
        assert!((bessel_j(0, 1e-8).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_truncation_bound() {
        for &x in &[0.0, 0.5, 2.74, 5.48] {
            let p = default_truncation(x) as i32 + 1;
            assert!(bessel_j(p, x).unwrap().abs() < 1e-16, "x = {x}");
        }
    }
}
