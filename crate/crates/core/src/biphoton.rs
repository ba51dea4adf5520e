//! Two-photon coincidence amplitudes for frequency-bin pairs.
//!
//! With both photons modulated, the amplitude for detecting Alice's photon at
//! `ω0 + ω'` and Bob's at `ω0 − ω' + dΩ` is the convolution
//! `c_d = Σ_p U_p(a, α) U_{d−p}(b, β)`, and the normalized coincidence rate is
//! `Q(d|a, b, Δ) = |c_d|²`. The two sinusoidal drives also compose into a
//! single drive of amplitude `|a e^{iα} + b e^{iβ}|`; [`effective_modulation`]
//! exposes that closed form as an independent check of the series.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
// Unused whenever std is linked into the build, which supplies the inherent methods.
#[allow(unused_imports)]
use num_traits::Float;

use crate::bessel::{self, BesselTable, J0_FIRST_ZERO};
use crate::error::{Diagnostic, Error, Result};
use crate::modulator::{ModulatorSettings, SidebandSeries, DEFAULT_RF_FREQUENCY};
use crate::optim::golden_section;

/// Default discarded sideband mass for [`truncation_order`]; sets the default
/// bin range of [`distribution`].
pub const AMPLITUDE_TOLERANCE: f64 = 1e-14;

/// Tail mass left out of the `c_d` series. Squared so that every neglected
/// amplitude, not just the neglected probability, is below
/// [`AMPLITUDE_TOLERANCE`].
const SERIES_TAIL_TOLERANCE: f64 = AMPLITUDE_TOLERANCE * AMPLITUDE_TOLERANCE;

/// Centre frequency of the photon pairs (1547.73 nm), in Hz.
pub const DEFAULT_CENTER_FREQUENCY: f64 = 299_792_458.0 / 1547.73e-9;
/// Width of a detected frequency bin (filter FWHM), in Hz.
pub const DEFAULT_BIN_WIDTH: f64 = 3e9;

/// Frequency-bin structure. All fields in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "GridRepr", into = "GridRepr")
)]
pub struct FrequencyGrid {
    center: f64,
    spacing: f64,
    bin_width: f64,
    offset: f64,
}

impl FrequencyGrid {
    pub fn new(center: f64, spacing: f64, bin_width: f64, offset: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter {
                name: "spacing",
                reason: "must be positive",
            });
        }
        if !(bin_width > 0.0 && bin_width < spacing) {
            return Err(Error::InvalidParameter {
                name: "bin_width",
                reason: "bins must satisfy 0 < bin_width < spacing",
            });
        }
        if !(center.is_finite() && offset.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "center",
                reason: "must be finite",
            });
        }
        Ok(Self {
            center,
            spacing,
            bin_width,
            offset,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Centre of Alice's detected bin.
    pub fn alice_bin(&self) -> f64 {
        self.center + self.offset
    }

    /// Centre of Bob's bin for joint displacement `d`.
    pub fn bob_bin(&self, d: i32) -> f64 {
        self.center - self.offset + d as f64 * self.spacing
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            center: DEFAULT_CENTER_FREQUENCY,
            spacing: DEFAULT_RF_FREQUENCY,
            bin_width: DEFAULT_BIN_WIDTH,
            offset: 0.0,
        }
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    center: f64,
    spacing: f64,
    bin_width: f64,
    #[serde(default)]
    offset: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<GridRepr> for FrequencyGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Self::new(r.center, r.spacing, r.bin_width, r.offset)
    }
}

#[cfg(feature = "serde")]
impl From<FrequencyGrid> for GridRepr {
    fn from(g: FrequencyGrid) -> Self {
        Self {
            center: g.center,
            spacing: g.spacing,
            bin_width: g.bin_width,
            offset: g.offset,
        }
    }
}

fn tail_order(x: f64, tol: f64) -> Result<usize> {
    let top = 2 * (x.abs().ceil() as usize) + 60;
    let table = BesselTable::new(top, x)?;
    // tails[p] = 2 Σ_{k > p} J_k², accumulated from the smallest terms up
    let mut tails = alloc::vec![0.0; top + 1];
    for p in (0..top).rev() {
        let j = table.get(p as i64 + 1);
        tails[p] = tails[p + 1] + 2.0 * j * j;
    }
    Ok(tails.iter().position(|&t| t < tol).unwrap_or(top))
}

/// Smallest `P >= 1` such that `Σ_{|p|>P} J_p(x)² < tol` for `x = a`, `b`
/// and `a + b`.
pub fn truncation_order(a: f64, b: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: "must be positive",
        });
    }
    let (a, b) = (a.abs(), b.abs());
    let p = tail_order(a, tol)?
        .max(tail_order(b, tol)?)
        .max(tail_order(a + b, tol)?);
    Ok(p.max(1))
}

/// Single drive equivalent to two drives at the same RF frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDrive {
    /// `√(a² + b² + 2ab cos Δ)`
    pub amplitude: f64,
    /// Phase of `a + b e^{−iΔ}`, i.e. of the phasor sum in a frame where
    /// Alice's RF phase is zero.
    pub phase: f64,
}

pub fn effective_modulation(a: f64, b: f64, delta: f64) -> EffectiveDrive {
    let phasor = Complex64::new(a, 0.0) + Complex64::from_polar(b, -delta);
    let amplitude = (a * a + b * b + 2.0 * a * b * delta.cos()).max(0.0).sqrt();
    EffectiveDrive {
        amplitude,
        phase: phasor.arg(),
    }
}

/// Single modulator whose sidebands reproduce `c_d(a, b, α, β)` exactly.
pub fn combined_drive(
    a_set: &ModulatorSettings,
    b_set: &ModulatorSettings,
) -> Result<ModulatorSettings> {
    let phasor = Complex64::from_polar(a_set.amplitude(), a_set.rf_phase())
        + Complex64::from_polar(b_set.amplitude(), b_set.rf_phase());
    ModulatorSettings::with_frequency(phasor.norm(), phasor.arg(), a_set.rf_frequency())
}

/// Precomputed sideband series of both modulators.
///
/// Evaluating many bins for one pair of settings reuses the Bessel tables.
#[derive(Debug, Clone)]
pub struct CoincidenceModel {
    settings_a: ModulatorSettings,
    settings_b: ModulatorSettings,
    order: usize,
    alice: SidebandSeries,
    bob: SidebandSeries,
}

impl CoincidenceModel {
    pub fn new(a_set: &ModulatorSettings, b_set: &ModulatorSettings) -> Result<Self> {
        let order = truncation_order(a_set.amplitude(), b_set.amplitude(), SERIES_TAIL_TOLERANCE)?;
        Ok(Self {
            settings_a: *a_set,
            settings_b: *b_set,
            order,
            alice: SidebandSeries::new(a_set, order)?,
            bob: SidebandSeries::new(b_set, 2 * order)?,
        })
    }

    pub fn truncation_order(&self) -> usize {
        self.order
    }

    /// `c_d`, summed over `|p| <= P`.
    pub fn amplitude(&self, d: i32) -> Complex64 {
        let p_max = self.order as i64;
        let d = d as i64;
        let bob = |q: i64| {
            if q.unsigned_abs() as usize <= self.bob.max_order() {
                self.bob.get(q)
            } else {
                // outside the table; only reached for very large |d|
                crate::modulator::sideband_coefficient(&self.settings_b, q as i32)
                    .map(|c| c.value)
                    .unwrap_or_default()
            }
        };
        (-p_max..=p_max)
            .map(|p| self.alice.get(p) * bob(d - p))
            .sum()
    }

    /// `Q(d) = |c_d|²`.
    pub fn probability(&self, d: i32) -> f64 {
        self.amplitude(d).norm_sqr()
    }

    pub fn settings(&self) -> (ModulatorSettings, ModulatorSettings) {
        (self.settings_a, self.settings_b)
    }
}

pub fn coincidence_amplitude(
    a_set: &ModulatorSettings,
    b_set: &ModulatorSettings,
    d: i32,
) -> Result<Complex64> {
    Ok(CoincidenceModel::new(a_set, b_set)?.amplitude(d))
}

pub fn coincidence_probability(
    a_set: &ModulatorSettings,
    b_set: &ModulatorSettings,
    d: i32,
) -> Result<f64> {
    Ok(coincidence_amplitude(a_set, b_set, d)?.norm_sqr())
}

/// `Q(d|a, b, Δ)` with Alice's phase at zero.
pub fn q(a: f64, b: f64, delta: f64, d: i32) -> Result<f64> {
    let a_set = ModulatorSettings::new(a, 0.0)?;
    let b_set = ModulatorSettings::new(b, -delta)?;
    coincidence_probability(&a_set, &b_set, d)
}

/// Coincidence amplitudes for `|d| <= max_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinDistribution {
    max_d: i32,
    amplitudes: Vec<Complex64>,
    settings_a: ModulatorSettings,
    settings_b: ModulatorSettings,
    truncation_order: usize,
}

impl BinDistribution {
    pub fn max_d(&self) -> i32 {
        self.max_d
    }

    pub fn settings(&self) -> (ModulatorSettings, ModulatorSettings) {
        (self.settings_a, self.settings_b)
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn amplitude(&self, d: i32) -> Complex64 {
        if d.abs() > self.max_d {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[(d + self.max_d) as usize]
        }
    }

    pub fn probability(&self, d: i32) -> f64 {
        self.amplitude(d).norm_sqr()
    }

    /// `(d, Q(d))` in increasing `d`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i32 - self.max_d, c.norm_sqr()))
    }

    pub fn total(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn missing_mass(&self) -> f64 {
        (1.0 - self.total()).max(0.0)
    }

    pub fn diagnostic(&self) -> Option<Diagnostic> {
        let missing = self.missing_mass();
        (missing > 1e-6).then_some(Diagnostic::DistributionTruncated {
            missing_mass: missing,
        })
    }
}

pub fn distribution(
    a_set: &ModulatorSettings,
    b_set: &ModulatorSettings,
    max_d: u32,
) -> Result<BinDistribution> {
    if max_d == 0 {
        return Err(Error::InvalidParameter {
            name: "max_d",
            reason: "must be at least 1",
        });
    }
    let model = CoincidenceModel::new(a_set, b_set)?;
    let max_d = max_d as i32;
    Ok(BinDistribution {
        max_d,
        amplitudes: (-max_d..=max_d).map(|d| model.amplitude(d)).collect(),
        settings_a: *a_set,
        settings_b: *b_set,
        truncation_order: model.truncation_order(),
    })
}

/// `max_d` that captures the whole distribution for the given amplitudes.
pub fn default_max_d(a: f64, b: f64) -> Result<u32> {
    Ok(truncation_order(a, b, AMPLITUDE_TOLERANCE)? as u32)
}

/// Positive zeros of `J_0` below `limit`.
pub fn j0_zeros(limit: f64) -> Vec<f64> {
    let mut zeros = Vec::new();
    let mut k = 1;
    loop {
        // McMahon's asymptotic start, refined by Newton (J_0' = −J_1).
        let beta = (k as f64 - 0.25) * PI;
        let mut z = if k == 1 {
            J0_FIRST_ZERO
        } else {
            beta + 1.0 / (8.0 * beta)
        };
        for _ in 0..50 {
            let (Ok(j0), Ok(j1)) = (bessel::bessel_j(0, z), bessel::bessel_j(1, z)) else {
                return zeros;
            };
            let step = j0 / j1;
            z += step;
            if step.abs() < 1e-15 * z {
                break;
            }
        }
        if z > limit {
            return zeros;
        }
        zeros.push(z);
        k += 1;
    }
}

/// Phases `Δ* ∈ [0, 2π)` where `Q(0|a, b, Δ)` vanishes.
pub fn dark_fringe_phases(a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if a <= 0.0 || b <= 0.0 {
        return out;
    }
    for z in j0_zeros(a + b) {
        let c = (z * z - a * a - b * b) / (2.0 * a * b);
        if (-1.0..=1.0).contains(&c) {
            let delta = c.acos();
            out.push(delta);
            if delta > 0.0 && delta < PI {
                out.push(TAU - delta);
            }
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

/// Outcome of [`visibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityReport {
    pub visibility: f64,
    pub q_max: f64,
    pub q_min: f64,
    /// Phase difference at which `q_min` occurs.
    pub delta_min: f64,
    pub diagnostic: Option<Diagnostic>,
}

const VISIBILITY_GRID: usize = 2048;

/// Fringe visibility of the `d = 0` coincidence rate as `Δ` is scanned.
///
/// `Q_max` is taken at `Δ = π`; `Q_min` is the global minimum over `Δ`, found
/// on a 2048-point grid and refined by golden-section search.
pub fn visibility(a: f64, b: f64) -> Result<VisibilityReport> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            reason: "visibility needs a, b > 0",
        });
    }
    let closed = |delta: f64| -> f64 {
        let c = effective_modulation(a, b, delta).amplitude;
        let j = bessel::bessel_j(0, c).unwrap_or(f64::NAN);
        j * j
    };
    let h = TAU / VISIBILITY_GRID as f64;
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for i in 0..VISIBILITY_GRID {
        let v = closed(i as f64 * h);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let centre = best_i as f64 * h;
    let (mut delta_min, refined) = golden_section(closed, centre - h, centre + h, 1e-10);
    if best_v < refined {
        delta_min = centre;
    }
    delta_min = crate::modulator::wrap_phase(delta_min);
    let q_min = q(a, b, delta_min, 0)?;
    let q_max = q(a, b, PI, 0)?;
    let diagnostic = (a + b < J0_FIRST_ZERO).then_some(Diagnostic::VisibilityBelowUnity {
        max_effective_amplitude: a + b,
    });
    Ok(VisibilityReport {
        visibility: (q_max - q_min) / (q_max + q_min),
        q_max,
        q_min,
        delta_min,
        diagnostic,
    })
}
