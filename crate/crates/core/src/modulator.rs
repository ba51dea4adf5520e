//! Sinusoidally driven electro-optic phase modulators.
//!
//! A drive `φ(t) = a cos(Ωt − α)` maps a monochromatic photon onto sidebands
//! `ω + pΩ` with amplitudes `U_p(a, α) = J_p(a) e^{ip(α − π/2)}`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
// Unused whenever std is linked into the build, which supplies the inherent methods.
#[allow(unused_imports)]
use num_traits::Float;

use crate::bessel::{self, BesselTable};
use crate::error::{Diagnostic, Error, Result};

/// RF drive frequency used by default, in Hz.
pub const DEFAULT_RF_FREQUENCY: f64 = 12.5e9;
/// Largest drive amplitude the original apparatus could reach.
pub const MAX_EXPERIMENTAL_AMPLITUDE: f64 = 2.74;
/// Half-wave voltage of the modulators, in volts.
pub const TYPICAL_HALF_WAVE_VOLTAGE: f64 = 2.9;

/// Converts an RF voltage amplitude into an optical phase amplitude `πV/V_π`.
pub fn amplitude_from_voltage(voltage: f64, half_wave_voltage: f64) -> f64 {
    PI * voltage / half_wave_voltage
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase % TAU;
    let r = if r < 0.0 { r + TAU } else { r };
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One side's RF drive.
///
/// A negative amplitude is stored as its magnitude with the RF phase advanced
/// by `π`, which describes the same physical drive.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "SettingsRepr", into = "SettingsRepr")
)]
pub struct ModulatorSettings {
    amplitude: f64,
    rf_phase: f64,
    rf_frequency: f64,
}

impl ModulatorSettings {
    pub fn new(amplitude: f64, rf_phase: f64) -> Result<Self> {
        Self::with_frequency(amplitude, rf_phase, DEFAULT_RF_FREQUENCY)
    }

    pub fn with_frequency(amplitude: f64, rf_phase: f64, rf_frequency: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "amplitude",
                reason: "must be finite",
            });
        }
        if !rf_phase.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rf_phase",
                reason: "must be finite",
            });
        }
        if !(rf_frequency.is_finite() && rf_frequency > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rf_frequency",
                reason: "must be positive",
            });
        }
        let (amplitude, rf_phase) = if amplitude < 0.0 {
            (-amplitude, rf_phase + PI)
        } else {
            (amplitude, rf_phase)
        };
        Ok(Self {
            amplitude,
            rf_phase: wrap_phase(rf_phase),
            rf_frequency,
        })
    }

    /// Modulator switched off.
    pub fn off() -> Self {
        Self {
            amplitude: 0.0,
            rf_phase: 0.0,
            rf_frequency: DEFAULT_RF_FREQUENCY,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn rf_phase(&self) -> f64 {
        self.rf_phase
    }

    pub fn rf_frequency(&self) -> f64 {
        self.rf_frequency
    }

    pub fn diagnostic(&self) -> Option<Diagnostic> {
        (self.amplitude > MAX_EXPERIMENTAL_AMPLITUDE + 1e-12).then_some(
            Diagnostic::AmplitudeOutsideExperimentalRange {
                amplitude: self.amplitude,
            },
        )
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsRepr {
    amplitude: f64,
    #[serde(default)]
    rf_phase: f64,
    #[serde(default = "default_rf_frequency")]
    rf_frequency: f64,
}

#[cfg(feature = "serde")]
fn default_rf_frequency() -> f64 {
    DEFAULT_RF_FREQUENCY
}

#[cfg(feature = "serde")]
impl TryFrom<SettingsRepr> for ModulatorSettings {
    type Error = Error;
    fn try_from(r: SettingsRepr) -> Result<Self> {
        Self::with_frequency(r.amplitude, r.rf_phase, r.rf_frequency)
    }
}

#[cfg(feature = "serde")]
impl From<ModulatorSettings> for SettingsRepr {
    fn from(s: ModulatorSettings) -> Self {
        Self {
            amplitude: s.amplitude,
            rf_phase: s.rf_phase,
            rf_frequency: s.rf_frequency,
        }
    }
}

/// `U_p` for a single sideband order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandCoefficient {
    pub order: i32,
    pub value: Complex64,
}

#[inline]
fn sideband_phase(order: i64, rf_phase: f64) -> Complex64 {
    let angle = wrap_phase(order as f64 * (rf_phase - FRAC_PI_2));
    Complex64::new(angle.cos(), angle.sin())
}

pub fn sideband_coefficient(
    settings: &ModulatorSettings,
    order: i32,
) -> Result<SidebandCoefficient> {
    let j = bessel::bessel_j(order, settings.amplitude)?;
    Ok(SidebandCoefficient {
        order,
        value: sideband_phase(order as i64, settings.rf_phase) * j,
    })
}

/// Sideband intensities `|J_p(a)|²` for `|p| <= max_order`, ordered by `p`.
pub fn sideband_spectrum(
    settings: &ModulatorSettings,
    max_order: usize,
) -> Result<Vec<(i32, f64)>> {
    if max_order == 0 {
        return Err(Error::InvalidParameter {
            name: "max_order",
            reason: "must be at least 1",
        });
    }
    let table = BesselTable::new(max_order, settings.amplitude)?;
    let m = max_order as i64;
    Ok((-m..=m)
        .map(|p| {
            let j = table.get(p);
            (p as i32, j * j)
        })
        .collect())
}

/// Precomputed `U_p(a, α)` for every `|p| <= max_order`.
#[derive(Debug, Clone)]
pub struct SidebandSeries {
    max_order: i64,
    values: Vec<Complex64>,
}

impl SidebandSeries {
    pub fn new(settings: &ModulatorSettings, max_order: usize) -> Result<Self> {
        let table = BesselTable::new(max_order, settings.amplitude)?;
        let m = max_order as i64;
        let values = (-m..=m)
            .map(|p| sideband_phase(p, settings.rf_phase) * table.get(p))
            .collect();
        Ok(Self {
            max_order: m,
            values,
        })
    }

    /// `U_order`, zero outside the retained range.
    #[inline]
    pub fn get(&self, order: i64) -> Complex64 {
        if order.abs() > self.max_order {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(order + self.max_order) as usize]
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_amplitude_is_normalized() {
        let s = ModulatorSettings::new(-1.5, 0.25).unwrap();
        assert_eq!(s.amplitude(), 1.5);
        assert!((s.rf_phase() - (0.25 + PI)).abs() < 1e-15);
        // same physical drive: identical sideband coefficients
        let t = ModulatorSettings::new(1.5, 0.25 + PI).unwrap();
        for p in -4..=4 {
            let u = sideband_coefficient(&s, p).unwrap().value;
            let v = sideband_coefficient(&t, p).unwrap().value;
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn phase_is_wrapped() {
        let s = ModulatorSettings::new(1.0, -0.5).unwrap();
        assert!((s.rf_phase() - (TAU - 0.5)).abs() < 1e-15);
        let s = ModulatorSettings::new(1.0, 7.0 * TAU + 0.1).unwrap();
        assert!((s.rf_phase() - 0.1).abs() < 1e-12);
        assert!((0.0..TAU).contains(&wrap_phase(-1e-18)));
    }

    #[test]
    fn invalid_settings() {
        assert!(ModulatorSettings::new(f64::NAN, 0.0).is_err());
        assert!(ModulatorSettings::new(1.0, f64::INFINITY).is_err());
        assert!(ModulatorSettings::with_frequency(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_drive_is_identity() {
        for alpha in [0.0, 1.0, 4.0] {
            let s = ModulatorSettings::new(0.0, alpha).unwrap();
            assert_eq!(
                sideband_coefficient(&s, 0).unwrap().value,
                Complex64::new(1.0, 0.0)
            );
            for p in [-3, -1, 1, 2] {
                assert_eq!(sideband_coefficient(&s, p).unwrap().value.norm(), 0.0);
            }
        }
    }

    #[test]
    fn first_sideband_phase() {
        let s = ModulatorSettings::new(2.74, 0.0).unwrap();
        let u = sideband_coefficient(&s, 1).unwrap().value;
        let j1 = bessel::bessel_j(1, 2.74).unwrap();
        assert!(u.re.abs() < 1e-16);
        assert!((u.im + j1).abs() < 1e-15);
    }

    #[test]
    fn spectrum_shape() {
        let off = sideband_spectrum(&ModulatorSettings::off(), 5).unwrap();
        assert_eq!(off.len(), 11);
        for (p, w) in off {
            assert_eq!(w, if p == 0 { 1.0 } else { 0.0 });
        }
        assert!(sideband_spectrum(&ModulatorSettings::off(), 0).is_err());
    }

    #[test]
    fn series_matches_pointwise() {
        let s = ModulatorSettings::new(1.95, 2.2).unwrap();
        let series = SidebandSeries::new(&s, 10).unwrap();
        for p in -10..=10 {
            let u = sideband_coefficient(&s, p).unwrap().value;
            assert!((series.get(p as i64) - u).norm() < 1e-15);
        }
        assert_eq!(series.get(11).norm(), 0.0);
    }

    #[test]
    fn diagnostics_flag_strong_drive() {
        assert!(ModulatorSettings::new(2.74, 0.0)
            .unwrap()
            .diagnostic()
            .is_none());
        assert!(ModulatorSettings::new(3.5, 0.0)
            .unwrap()
            .diagnostic()
            .is_some());
    }
}
