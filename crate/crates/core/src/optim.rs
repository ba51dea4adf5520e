//! Small derivative-free minimizers shared by the analysis modules.

use alloc::vec::Vec;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` on `[lo, hi]` to an interval narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Settings for [`compass_search`].
#[derive(Debug, Clone, Copy)]
pub struct CompassOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evaluations: usize,
}

impl Default for CompassOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            min_step: 1e-9,
            max_evaluations: 200_000,
        }
    }
}

/// Coordinate (compass) search minimizing `f` from `x`, in place.
///
/// Each sweep polls `±step` along every coordinate and keeps any improvement;
/// the step halves after a sweep without progress. Points are clamped into
/// `bounds` when given. Returns the final objective value.
pub fn compass_search<F>(
    mut f: F,
    x: &mut [f64],
    bounds: Option<&[(f64, f64)]>,
    opts: CompassOptions,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let clamp = |i: usize, v: f64| match bounds {
        Some(b) => v.max(b[i].0).min(b[i].1),
        None => v,
    };
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = clamp(i, *xi);
    }
    let mut best = f(x);
    let mut evals = 1;
    let mut step = opts.initial_step;
    let mut trial: Vec<f64> = x.to_vec();
    while step >= opts.min_step && evals < opts.max_evaluations {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                trial.copy_from_slice(x);
                trial[i] = clamp(i, x[i] + dir * step);
                if trial[i] == x[i] {
                    continue;
                }
                let v = f(&trial);
                evals += 1;
                if v < best {
                    best = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compass_finds_quadratic_minimum() {
        let mut x = [3.0, -2.0, 0.5];
        let v = compass_search(
            |p| (p[0] - 1.0).powi(2) + 2.0 * (p[1] + 0.5).powi(2) + (p[2] - p[0]).powi(2),
            &mut x,
            None,
            CompassOptions::default(),
        );
        assert!(v < 1e-16);
        assert!((x[0] - 1.0).abs() < 1e-7 && (x[1] + 0.5).abs() < 1e-7);
    }

    #[test]
    fn compass_respects_bounds() {
        let mut x = [0.0, 0.0];
        let b = [(-1.0, 1.0), (0.5, 2.0)];
        compass_search(
            |p| -(p[0] + p[1]),
            &mut x,
            Some(&b),
            CompassOptions::default(),
        );
        assert_eq!(x, [1.0, 2.0]);
    }
}
