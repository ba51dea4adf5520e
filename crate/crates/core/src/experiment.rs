//! Monte Carlo emulation of the coincidence-counting experiment.
//!
//! Each run produces a TDC histogram of arrival-time differences: a flat
//! accidental background drawn from independent singles, plus true
//! coincidences in a single peak bin whose mean follows the bin-pair rate,
//! detector efficiencies, filter transmissions and `Q(d|a, b, Δ)`. The
//! background-subtracted, normalized estimator `Q̃` is computed from a run and
//! a reference run taken with both modulators off and `d = 0`.
//!
//! Detectors are gated synchronously; coincidences and accidentals only occur
//! while both gates are open. The defaults are calibrated so that the
//! reference configuration gives about 10 coincidences per second with a
//! signal-to-accidental ratio of 100.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

// Unused whenever std is linked into the build, which supplies the inherent methods.
#[allow(unused_imports)]
use num_traits::Float;

use crate::biphoton::{self, CoincidenceModel, FrequencyGrid};
use crate::error::{Error, Result};
use crate::modulator::ModulatorSettings;

/// Default coincidence rate with the modulators off, in Hz.
pub const TARGET_MAX_COINCIDENCE_RATE: f64 = 10.0;
/// Default ratio of true to accidental coincidences in the peak bin.
pub const TARGET_SNR: f64 = 100.0;
/// Coincidences collected at `Q = 1` for one scan point.
pub const DEFAULT_COUNT_BUDGET: f64 = 1e3;
/// Off-peak bins needed to estimate the accidental background.
pub const MIN_BACKGROUND_BINS: usize = 50;

const MAX_SUPER_GAUSSIAN_ORDER: u32 = 8;

fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

/// Narrow-band filter (FBG plus circulator). Frequencies in Hz relative to
/// the pair centre frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "FilterRepr", into = "FilterRepr"))]
pub struct FilterSpec {
    center_detuning: f64,
    fwhm: f64,
    isolation_db: f64,
    isolation_detuning: f64,
    insertion_loss_db: f64,
    order: u32,
}

impl FilterSpec {
    pub fn new(
        center_detuning: f64,
        fwhm: f64,
        isolation_db: f64,
        isolation_detuning: f64,
        insertion_loss_db: f64,
    ) -> Result<Self> {
        if !(fwhm.is_finite() && fwhm > 0.0) {
            return Err(invalid("fwhm", "must be positive"));
        }
        if !(isolation_db.is_finite() && isolation_db >= 0.0) {
            return Err(invalid("isolation_db", "must be non-negative"));
        }
        if !(insertion_loss_db.is_finite() && insertion_loss_db >= 0.0) {
            return Err(invalid("insertion_loss_db", "must be non-negative"));
        }
        if !(isolation_detuning.is_finite() && isolation_detuning > 0.0) {
            return Err(invalid("isolation_detuning", "must be positive"));
        }
        if !center_detuning.is_finite() {
            return Err(invalid("center_detuning", "must be finite"));
        }
        let required = isolation_db * core::f64::consts::LN_10 / 10.0;
        let x = 2.0 * isolation_detuning / fwhm;
        let order = (1..=MAX_SUPER_GAUSSIAN_ORDER)
            .find(|&n| LN_2 * x.powi(2 * n as i32) >= required)
            .ok_or(Error::FilterIsolationUnreachable { isolation_db })?;
        Ok(Self {
            center_detuning,
            fwhm,
            isolation_db,
            isolation_detuning,
            insertion_loss_db,
            order,
        })
    }

    /// Same filter tuned to a different centre.
    pub fn tuned_to(mut self, center_detuning: f64) -> Self {
        self.center_detuning = center_detuning;
        self
    }

    pub fn center_detuning(&self) -> f64 {
        self.center_detuning
    }

    pub fn fwhm(&self) -> f64 {
        self.fwhm
    }

    /// Super-Gaussian exponent `n` of the lineshape.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn peak_transmission(&self) -> f64 {
        libm::pow(10.0, -self.insertion_loss_db / 10.0)
    }

    /// `T(δ) = T_peak exp(−ln2 (2(δ − δ_c)/FWHM)^{2n})`.
    pub fn transmission(&self, detuning: f64) -> f64 {
        let x = 2.0 * (detuning - self.center_detuning) / self.fwhm;
        self.peak_transmission() * (-LN_2 * x.powi(2 * self.order as i32)).exp()
    }
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self::new(0.0, 3e9, 30.0, 6.25e9, 1.0).expect("default filter is valid")
    }
}

pub fn filter_transmission(spec: &FilterSpec, detuning: f64) -> f64 {
    spec.transmission(detuning)
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterRepr {
    center_detuning: f64,
    fwhm: f64,
    isolation_db: f64,
    isolation_detuning: f64,
    insertion_loss_db: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<FilterRepr> for FilterSpec {
    type Error = Error;
    fn try_from(r: FilterRepr) -> Result<Self> {
        Self::new(
            r.center_detuning,
            r.fwhm,
            r.isolation_db,
            r.isolation_detuning,
            r.insertion_loss_db,
        )
    }
}

#[cfg(feature = "serde")]
impl From<FilterSpec> for FilterRepr {
    fn from(f: FilterSpec) -> Self {
        Self {
            center_detuning: f.center_detuning,
            fwhm: f.fwhm,
            isolation_db: f.isolation_db,
            isolation_detuning: f.isolation_detuning,
            insertion_loss_db: f.insertion_loss_db,
        }
    }
}

/// Gated single-photon detector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Dark counts per ns of open gate.
    pub dark_rate: f64,
    /// Gate duration, in ns.
    pub gate_width: f64,
    /// Gates per second.
    pub gate_rate: f64,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("efficiency", "must lie in [0, 1]"));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(invalid("dark_rate", "must be non-negative"));
        }
        if !(self.gate_width > 0.0 && self.gate_rate > 0.0) {
            return Err(invalid("gate", "width and rate must be positive"));
        }
        if self.duty_cycle() > 1.0 {
            return Err(invalid("gate", "gates overlap (duty cycle > 1)"));
        }
        Ok(())
    }

    /// Fraction of time the gate is open.
    pub fn duty_cycle(&self) -> f64 {
        self.gate_width * 1e-9 * self.gate_rate
    }

    /// Dark counts per second of open gate.
    pub fn dark_rate_hz(&self) -> f64 {
        self.dark_rate * 1e9
    }
}

impl DetectorSpec {
    pub fn alice_default() -> Self {
        Self {
            efficiency: 0.15,
            dark_rate: 3.5e-5,
            gate_width: 5.0,
            gate_rate: 1e6,
        }
    }

    pub fn bob_default() -> Self {
        Self {
            dark_rate: 8.0e-5,
            ..Self::alice_default()
        }
    }
}

/// Pair spectral density `|f(ν)|²` as a function of the detuning of Alice's
/// photon from the centre frequency, normalized to unit integral.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum SpectralDensity {
    Flat { bandwidth: f64 },
    Gaussian { fwhm: f64 },
}

impl SpectralDensity {
    pub fn density(&self, detuning: f64) -> f64 {
        match *self {
            SpectralDensity::Flat { bandwidth } => {
                if detuning.abs() <= bandwidth / 2.0 {
                    1.0 / bandwidth
                } else {
                    0.0
                }
            }
            SpectralDensity::Gaussian { fwhm } => {
                let sigma = fwhm / (2.0 * (2.0 * LN_2).sqrt());
                let z = detuning / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * core::f64::consts::PI).sqrt())
            }
        }
    }

    /// `∫_lo^hi |f|²`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            SpectralDensity::Flat { bandwidth } => {
                let half = bandwidth / 2.0;
                (hi.min(half) - lo.max(-half)).max(0.0) / bandwidth
            }
            SpectralDensity::Gaussian { fwhm } => {
                let sigma = fwhm / (2.0 * (2.0 * LN_2).sqrt());
                let s = sigma * core::f64::consts::SQRT_2;
                0.5 * (libm::erf(hi / s) - libm::erf(lo / s))
            }
        }
    }

    /// Whether `|f|²` changes by less than `rel_tol` across one `spacing`
    /// anywhere within `±span` of the centre.
    pub fn is_slowly_varying(&self, spacing: f64, span: f64, rel_tol: f64) -> bool {
        let steps = (2.0 * span / spacing).ceil() as i64;
        (0..steps).all(|k| {
            let x = -span + k as f64 * spacing;
            let (f0, f1) = (self.density(x), self.density(x + spacing));
            let scale = f0.max(f1);
            scale == 0.0 || (f1 - f0).abs() <= rel_tol * scale
        })
    }

    fn validate(&self) -> Result<()> {
        let w = match *self {
            SpectralDensity::Flat { bandwidth } => bandwidth,
            SpectralDensity::Gaussian { fwhm } => fwhm,
        };
        if w.is_finite() && w > 0.0 {
            Ok(())
        } else {
            Err(invalid("spectral_density", "width must be positive"))
        }
    }
}

/// Photon-pair source.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SourceSpec {
    pub spectral_density: SpectralDensity,
    /// Total pair rate over the whole spectrum, in pairs/s (absorbs pump
    /// power and coupling efficiencies).
    pub pair_rate_scale: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            spectral_density: SpectralDensity::Flat { bandwidth: 5e12 },
            pair_rate_scale: 1.0,
        }
    }
}

/// Rate of pairs with Alice's photon inside her bin, in pairs/s.
pub fn bin_pair_rate(source: &SourceSpec, grid: &FrequencyGrid) -> f64 {
    let half = grid.bin_width() / 2.0;
    source.pair_rate_scale
        * source
            .spectral_density
            .integral(grid.offset() - half, grid.offset() + half)
}

/// Time-to-digital converter binning.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TdcSpec {
    /// Width of one time bin (the coincidence window), in ns.
    pub bin_width: f64,
    pub n_bins: usize,
}

impl Default for TdcSpec {
    fn default() -> Self {
        Self {
            bin_width: 1.0,
            n_bins: 101,
        }
    }
}

impl TdcSpec {
    pub fn peak_index(&self) -> usize {
        self.n_bins / 2
    }

    fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) {
            return Err(invalid("tdc.bin_width", "must be positive"));
        }
        if self.n_bins < MIN_BACKGROUND_BINS + 1 {
            return Err(invalid("tdc.n_bins", "need at least 50 off-peak bins"));
        }
        Ok(())
    }
}

/// Full description of the counting apparatus.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ExperimentSpec {
    pub grid: FrequencyGrid,
    pub source: SourceSpec,
    /// Alice's filter; stays on her bin.
    pub filter_a: FilterSpec,
    /// Bob's filter shape; its centre is retuned to `dΩ` for each run.
    pub filter_b: FilterSpec,
    pub detector_a: DetectorSpec,
    pub detector_b: DetectorSpec,
    pub tdc: TdcSpec,
    /// Systematic mis-centring of Bob's filter, in Hz.
    #[cfg_attr(feature = "serde", serde(default))]
    pub bob_filter_error: f64,
}

impl Default for ExperimentSpec {
    /// Reference apparatus, calibrated to 10 Hz peak coincidences at SNR 100.
    fn default() -> Self {
        let mut spec = Self {
            grid: FrequencyGrid::default(),
            source: SourceSpec::default(),
            filter_a: FilterSpec::default(),
            filter_b: FilterSpec::default(),
            detector_a: DetectorSpec::alice_default(),
            detector_b: DetectorSpec::bob_default(),
            tdc: TdcSpec::default(),
            bob_filter_error: 0.0,
        };
        spec.calibrate(TARGET_MAX_COINCIDENCE_RATE, TARGET_SNR)
            .expect("default apparatus admits a calibration");
        spec
    }
}

/// Mean counts expected in one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    /// True coincidences, all in the peak bin.
    pub true_coincidences: f64,
    /// Accidentals per TDC bin.
    pub accidentals_per_bin: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.detector_a.validate()?;
        self.detector_b.validate()?;
        self.tdc.validate()?;
        self.source.spectral_density.validate()?;
        if !(self.source.pair_rate_scale.is_finite() && self.source.pair_rate_scale >= 0.0) {
            return Err(invalid("pair_rate_scale", "must be non-negative"));
        }
        if !self.bob_filter_error.is_finite() {
            return Err(invalid("bob_filter_error", "must be finite"));
        }
        Ok(())
    }

    /// Fraction of time both (synchronous) gates are open.
    pub fn joint_duty_cycle(&self) -> f64 {
        self.detector_a
            .duty_cycle()
            .min(self.detector_b.duty_cycle())
    }

    fn bob_filter(&self, d: i32) -> FilterSpec {
        self.filter_b
            .tuned_to(d as f64 * self.grid.spacing() + self.bob_filter_error)
    }

    fn alice_transmission(&self) -> f64 {
        self.filter_a.transmission(self.grid.offset())
    }

    /// Singles click rates (per second of open gate) of both detectors.
    fn singles(&self, d: i32) -> (f64, f64) {
        let pairs = bin_pair_rate(&self.source, &self.grid);
        let bob = self.bob_filter(d);
        // Local flux is unchanged by modulation when |f|² is flat on the
        // sideband scale, so each filter passes its own bin's photons.
        let s_a = self.detector_a.efficiency * pairs * self.alice_transmission()
            + self.detector_a.dark_rate_hz();
        let s_b = self.detector_b.efficiency
            * pairs
            * bob.transmission(bob.center_detuning() - self.bob_filter_error)
            + self.detector_b.dark_rate_hz();
        (s_a, s_b)
    }

    /// Expected counts for a run of `duration` seconds.
    pub fn expected_counts(
        &self,
        model: &CoincidenceModel,
        d: i32,
        duration: f64,
    ) -> ExpectedCounts {
        let duty = self.joint_duty_cycle();
        let pairs = bin_pair_rate(&self.source, &self.grid);
        let bob = self.bob_filter(d);
        let spacing = self.grid.spacing();
        // Bob's photon partnering Alice's bin sits at d'Ω − ω'; neighbouring
        // d' leak through the filter skirts.
        let leak: f64 = (d - 3..=d + 3)
            .map(|dp| {
                model.probability(dp) * bob.transmission(dp as f64 * spacing - self.grid.offset())
            })
            .sum();
        let rate = duty
            * pairs
            * self.detector_a.efficiency
            * self.detector_b.efficiency
            * self.alice_transmission()
            * leak;
        let (s_a, s_b) = self.singles(d);
        let tau = self.tdc.bin_width * 1e-9;
        ExpectedCounts {
            true_coincidences: duration * rate,
            accidentals_per_bin: duration * duty * s_a * s_b * tau,
        }
    }

    /// True coincidence rate with both modulators off and `d = 0`, in Hz.
    pub fn max_coincidence_rate(&self) -> f64 {
        let off = ModulatorSettings::off();
        let model = CoincidenceModel::new(&off, &off).expect("zero drive is in domain");
        self.expected_counts(&model, 0, 1.0).true_coincidences
    }

    /// True-to-accidental ratio in the peak bin of the reference run.
    pub fn reference_snr(&self) -> f64 {
        let off = ModulatorSettings::off();
        let model = CoincidenceModel::new(&off, &off).expect("zero drive is in domain");
        let e = self.expected_counts(&model, 0, 1.0);
        e.true_coincidences / e.accidentals_per_bin
    }

    /// Chooses the pair rate and the common gate rate so that the reference
    /// configuration yields `max_rate` true coincidences per second at
    /// `snr` true-to-accidental ratio.
    ///
    /// Of the two solutions the dark-count-limited one (lower pair flux) is
    /// taken.
    pub fn calibrate(&mut self, max_rate: f64, snr: f64) -> Result<()> {
        if !(max_rate > 0.0 && snr > 0.0) {
            return Err(invalid("calibration", "targets must be positive"));
        }
        let u = self.detector_a.efficiency * self.alice_transmission();
        let bob = self.bob_filter(0);
        let v = self.detector_b.efficiency
            * bob.transmission(bob.center_detuning() - self.bob_filter_error);
        let k = u * v;
        let (da, db) = (
            self.detector_a.dark_rate_hz(),
            self.detector_b.dark_rate_hz(),
        );
        let tau = self.tdc.bin_width * 1e-9;
        // snr τ (u R + da)(v R + db) = k R
        let qa = snr * tau * u * v;
        let qb = snr * tau * (u * db + v * da) - k;
        let qc = snr * tau * da * db;
        let disc = qb * qb - 4.0 * qa * qc;
        if !(k > 0.0) || disc < 0.0 {
            return Err(invalid(
                "calibration",
                "target SNR is unreachable with these detectors",
            ));
        }
        // numerically stable smaller root
        let pairs = 2.0 * qc / (-qb + disc.sqrt());
        let duty = max_rate / (k * pairs);
        if !(duty > 0.0 && duty <= 1.0) {
            return Err(invalid("calibration", "required duty cycle exceeds one"));
        }
        let gate_width = self.detector_a.gate_width.min(self.detector_b.gate_width);
        let gate_rate = duty / (gate_width * 1e-9);
        self.detector_a.gate_rate = gate_rate;
        self.detector_b.gate_rate = gate_rate;
        let half = self.grid.bin_width() / 2.0;
        let fraction = self
            .source
            .spectral_density
            .integral(self.grid.offset() - half, self.grid.offset() + half);
        if !(fraction > 0.0) {
            return Err(invalid(
                "calibration",
                "detected bin lies outside the source band",
            ));
        }
        self.source.pair_rate_scale = pairs / fraction;
        self.validate()
    }

    /// Acquisition time that yields `budget` true coincidences at `Q = 1`.
    pub fn duration_for_budget(&self, budget: f64) -> f64 {
        budget / self.max_coincidence_rate()
    }
}

/// Arrival-time-difference histogram recorded by the TDC.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TdcHistogram {
    /// ns
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub peak_index: usize,
    /// Acquisition time, in s.
    pub duration: f64,
}

/// Counts extracted from the peak window and the background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakCounts {
    pub n_coinc: u64,
    /// Estimated accidentals inside the peak window.
    pub n_acc: f64,
    /// Variance of `n_acc` from the finite background sample.
    pub n_acc_variance: f64,
    pub duration: f64,
}

impl PeakCounts {
    /// Counts with an exactly known accidental level.
    pub fn exact(n_coinc: u64, n_acc: f64, duration: f64) -> Self {
        Self {
            n_coinc,
            n_acc,
            n_acc_variance: 0.0,
            duration,
        }
    }

    pub fn net(&self) -> f64 {
        self.n_coinc as f64 - self.n_acc
    }

    fn net_variance(&self) -> f64 {
        self.n_coinc as f64 + self.n_acc_variance
    }
}

impl TdcHistogram {
    pub fn new(bin_width: f64, counts: Vec<u64>, peak_index: usize, duration: f64) -> Result<Self> {
        if peak_index >= counts.len() {
            return Err(invalid("peak_index", "outside the histogram"));
        }
        if !(bin_width > 0.0 && duration >= 0.0) {
            return Err(invalid(
                "histogram",
                "bin width and duration must be positive",
            ));
        }
        Ok(Self {
            bin_width,
            counts,
            peak_index,
            duration,
        })
    }

    pub fn off_peak(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(move |&(i, _)| i != self.peak_index)
            .map(|(_, &c)| c)
    }

    /// Peak-window counts with the background estimated from the mean of the
    /// off-peak bins.
    pub fn peak_counts(&self) -> Result<PeakCounts> {
        let n_off = self.counts.len() - 1;
        if n_off < MIN_BACKGROUND_BINS {
            return Err(invalid("histogram", "need at least 50 off-peak bins"));
        }
        let total: u64 = self.off_peak().sum();
        let n = n_off as f64;
        Ok(PeakCounts {
            n_coinc: self.counts[self.peak_index],
            n_acc: total as f64 / n,
            n_acc_variance: total as f64 / (n * n),
            duration: self.duration,
        })
    }

    fn same_binning(&self, other: &Self) -> bool {
        self.bin_width == other.bin_width
            && self.peak_index == other.peak_index
            && self.counts.len() == other.counts.len()
    }
}

/// Normalized estimate from one run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    pub n_coinc: u64,
    pub n_acc: f64,
    pub q_tilde: f64,
    pub q_sigma: f64,
    /// `(N_c − N_ac)/N_ac`, when there are accidentals.
    pub snr: Option<f64>,
}

/// Background-subtracted coincidences normalized by the reference run,
/// scaled by the ratio of acquisition times when they differ. The error is
/// first-order propagation of independent Poisson counts through the ratio.
pub fn estimate_from_counts(run: &PeakCounts, reference: &PeakCounts) -> Result<RunResult> {
    let den = reference.net();
    if !(den > 0.0) {
        return Err(Error::DegenerateReference { numerator: den });
    }
    if !(run.duration > 0.0 && reference.duration > 0.0) {
        return Err(invalid("duration", "must be positive"));
    }
    let ratio = reference.duration / run.duration;
    let num = run.net();
    let q_tilde = ratio * num / den;
    let var = ratio * ratio * run.net_variance() / (den * den)
        + q_tilde * q_tilde * reference.net_variance() / (den * den);
    Ok(RunResult {
        n_coinc: run.n_coinc,
        n_acc: run.n_acc,
        q_tilde,
        q_sigma: var.sqrt(),
        snr: (run.n_acc > 0.0).then(|| num / run.n_acc),
    })
}

pub fn estimate_q(run: &TdcHistogram, reference: &TdcHistogram) -> Result<RunResult> {
    if !run.same_binning(reference) {
        return Err(Error::HistogramMismatch);
    }
    estimate_from_counts(&run.peak_counts()?, &reference.peak_counts()?)
}

fn poisson<R: rand::Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

/// Seed of stream `stream` derived from `base` (SplitMix64).
///
/// Scan points and restarts use their index as the stream, so results do
/// not depend on execution order.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream reserved for the normalization run of a scan.
pub const REFERENCE_STREAM: u64 = u64::MAX;

/// Emulates one acquisition with Bob's filter on bin `d`.
pub fn simulate_run(
    exp: &ExperimentSpec,
    a_set: &ModulatorSettings,
    b_set: &ModulatorSettings,
    d: i32,
    duration: f64,
    seed: u64,
) -> Result<TdcHistogram> {
    let model = CoincidenceModel::new(a_set, b_set)?;
    simulate_with_model(exp, &model, d, duration, seed)
}

pub fn simulate_with_model(
    exp: &ExperimentSpec,
    model: &CoincidenceModel,
    d: i32,
    duration: f64,
    seed: u64,
) -> Result<TdcHistogram> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid("duration", "must be positive"));
    }
    exp.validate()?;
    let expected = exp.expected_counts(model, d, duration);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; exp.tdc.n_bins];
    for c in counts.iter_mut() {
        *c = poisson(expected.accidentals_per_bin, &mut rng);
    }
    let peak = exp.tdc.peak_index();
    counts[peak] += poisson(expected.true_coincidences, &mut rng);
    TdcHistogram::new(exp.tdc.bin_width, counts, peak, duration)
}

/// Normalization run: modulators off, `d = 0`.
pub fn reference_run(exp: &ExperimentSpec, duration: f64, seed: u64) -> Result<TdcHistogram> {
    let off = ModulatorSettings::off();
    simulate_run(exp, &off, &off, 0, duration, seed)
}

/// One point of an amplitude or phase scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub d: i32,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

/// One row of a scan dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanRow {
    pub d: i32,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub q_analytic: f64,
    pub q_tilde: f64,
    pub q_sigma: f64,
    pub n_coinc: u64,
    pub n_acc: f64,
}

/// Points of an amplitude scan with `a = b`, ordered by `d` then `a`.
pub fn amplitude_points(d_list: &[i32], a_grid: &[f64], delta: f64) -> Vec<ScanPoint> {
    d_list
        .iter()
        .flat_map(|&d| a_grid.iter().map(move |&a| ScanPoint { d, a, b: a, delta }))
        .collect()
}

/// Points of a phase scan at fixed `a = b`, ordered by `d` then `Δ`.
pub fn phase_points(d_list: &[i32], amplitude: f64, delta_grid: &[f64]) -> Vec<ScanPoint> {
    d_list
        .iter()
        .flat_map(|&d| {
            delta_grid.iter().map(move |&delta| ScanPoint {
                d,
                a: amplitude,
                b: amplitude,
                delta,
            })
        })
        .collect()
}

/// Simulates and estimates a single scan point against a shared reference.
pub fn run_scan_point(
    exp: &ExperimentSpec,
    point: &ScanPoint,
    reference: &PeakCounts,
    duration: f64,
    seed: u64,
    index: u64,
) -> Result<ScanRow> {
    let a_set = ModulatorSettings::new(point.a, 0.0)?;
    let b_set = ModulatorSettings::new(point.b, -point.delta)?;
    let model = CoincidenceModel::new(&a_set, &b_set)?;
    let hist = simulate_with_model(exp, &model, point.d, duration, derive_seed(seed, index))?;
    let est = estimate_from_counts(&hist.peak_counts()?, reference)?;
    Ok(ScanRow {
        d: point.d,
        a: point.a,
        b: point.b,
        delta: point.delta,
        q_analytic: model.probability(point.d),
        q_tilde: est.q_tilde,
        q_sigma: est.q_sigma,
        n_coinc: est.n_coinc,
        n_acc: est.n_acc,
    })
}

/// Reference counts shared by every point of a scan.
pub fn scan_reference(exp: &ExperimentSpec, duration: f64, seed: u64) -> Result<PeakCounts> {
    reference_run(exp, duration, derive_seed(seed, REFERENCE_STREAM))?.peak_counts()
}

/// Runs `points` in order. Each point collects `budget · Q` coincidences on
/// average (constant acquisition time), normalized by one reference run.
pub fn run_scan(
    exp: &ExperimentSpec,
    points: &[ScanPoint],
    budget: f64,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    if points.is_empty() {
        return Err(invalid("scan", "grid is empty"));
    }
    let duration = exp.duration_for_budget(budget);
    let reference = scan_reference(exp, duration, seed)?;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| run_scan_point(exp, p, &reference, duration, seed, i as u64))
        .collect()
}

pub fn scan_amplitude(
    exp: &ExperimentSpec,
    d_list: &[i32],
    a_grid: &[f64],
    delta: f64,
    budget: f64,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    run_scan(exp, &amplitude_points(d_list, a_grid, delta), budget, seed)
}

pub fn scan_phase(
    exp: &ExperimentSpec,
    d_list: &[i32],
    amplitude: f64,
    delta_grid: &[f64],
    budget: f64,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    run_scan(
        exp,
        &phase_points(d_list, amplitude, delta_grid),
        budget,
        seed,
    )
}

/// Fringe visibility measured from raw peak-window counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedVisibility {
    /// `(N_max − N_min)/(N_max + N_min)` with accidentals included.
    pub raw: f64,
    /// Same contrast after background subtraction.
    pub subtracted: f64,
    pub n_max: u64,
    pub n_min: u64,
    pub delta_min: f64,
}

fn contrast(max: f64, min: f64) -> f64 {
    (max - min) / (max + min)
}

/// Measures the `d = 0` fringe at `Δ = π` and at the analytic minimum.
pub fn simulated_visibility(
    exp: &ExperimentSpec,
    a: f64,
    b: f64,
    budget: f64,
    seed: u64,
) -> Result<SimulatedVisibility> {
    let analytic = biphoton::visibility(a, b)?;
    let duration = exp.duration_for_budget(budget);
    let run = |delta: f64, stream: u64| -> Result<PeakCounts> {
        let a_set = ModulatorSettings::new(a, 0.0)?;
        let b_set = ModulatorSettings::new(b, -delta)?;
        simulate_run(exp, &a_set, &b_set, 0, duration, derive_seed(seed, stream))?.peak_counts()
    };
    let hi = run(core::f64::consts::PI, 0)?;
    let lo = run(analytic.delta_min, 1)?;
    Ok(SimulatedVisibility {
        raw: contrast(hi.n_coinc as f64, lo.n_coinc as f64),
        subtracted: contrast(hi.net(), lo.net()),
        n_max: hi.n_coinc,
        n_min: lo.n_coinc,
        delta_min: analytic.delta_min,
    })
}

/// Raw-count visibility from the `d = 0` rows of a phase scan.
pub fn visibility_from_rows(rows: &[ScanRow]) -> Option<f64> {
    let counts = rows.iter().filter(|r| r.d == 0).map(|r| r.n_coinc);
    let max = counts.clone().max()?;
    let min = counts.min()?;
    (max + min > 0).then(|| contrast(max as f64, min as f64))
}
