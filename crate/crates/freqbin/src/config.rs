//! Scenario configuration: one JSON document per run.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context};
use freqbin_core::bell::{
    BellBudget, DEFAULT_RESTARTS, DEFAULT_TOLERANCE_ALPHA, DEFAULT_TOLERANCE_A_REL,
    DEFAULT_TOLERANCE_BETA,
};
use freqbin_core::experiment::{ExperimentSpec, DEFAULT_COUNT_BUDGET};
use freqbin_core::modulator::MAX_EXPERIMENTAL_AMPLITUDE;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::range::StepRange;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub scan_amplitude: AmplitudeScanConfig,
    #[serde(default)]
    pub scan_phase: PhaseScanConfig,
    #[serde(default)]
    pub visibility: VisibilityConfig,
    #[serde(default)]
    pub bell: BellSection,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

fn default_seed() -> u64 {
    1
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            experiment: ExperimentSpec::default(),
            spectrum: SpectrumConfig::default(),
            scan_amplitude: AmplitudeScanConfig::default(),
            scan_phase: PhaseScanConfig::default(),
            visibility: VisibilityConfig::default(),
            bell: BellSection::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Sideband table of a single modulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub amplitude: f64,
    pub rf_phase: f64,
    /// Largest `|p|` listed; when absent, the largest order whose weight
    /// reaches `min_weight`.
    pub max_order: Option<usize>,
    pub min_weight: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            amplitude: MAX_EXPERIMENTAL_AMPLITUDE,
            rf_phase: 0.0,
            max_order: None,
            min_weight: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeScanConfig {
    pub d: Vec<i32>,
    /// Simulated points, with `a = b`.
    pub amplitudes: StepRange,
    /// Step of the analytic curve.
    pub curve_step: f64,
    pub delta: f64,
    /// Expected true coincidences per point at `Q = 1`.
    pub budget: f64,
}

impl Default for AmplitudeScanConfig {
    fn default() -> Self {
        Self {
            d: (0..=5).collect(),
            amplitudes: StepRange {
                start: 0.0,
                stop: MAX_EXPERIMENTAL_AMPLITUDE,
                step: 0.137,
            },
            curve_step: 0.01,
            delta: 0.0,
            budget: DEFAULT_COUNT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseScanConfig {
    pub d: Vec<i32>,
    pub amplitude: f64,
    /// Simulated points spread evenly over `[0, 2π]`, both ends included.
    pub points: usize,
    pub curve_points: usize,
    pub budget: f64,
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        Self {
            d: (0..=5).collect(),
            amplitude: MAX_EXPERIMENTAL_AMPLITUDE,
            points: 25,
            curve_points: 361,
            budget: DEFAULT_COUNT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VisibilityConfig {
    pub a: f64,
    pub b: f64,
    pub budget: f64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        Self {
            a: MAX_EXPERIMENTAL_AMPLITUDE,
            b: MAX_EXPERIMENTAL_AMPLITUDE,
            budget: DEFAULT_COUNT_BUDGET,
        }
    }
}

/// Shared by `bell-optimize` (single `amplitude`) and `bell-scan`
/// (`amplitudes`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BellSection {
    pub amplitude: f64,
    pub amplitudes: StepRange,
    pub restarts: usize,
    pub tolerance_a_rel: f64,
    pub tolerance_alpha: f64,
    pub tolerance_beta: f64,
    pub simulate: bool,
    pub budget: BellBudget,
}

impl Default for BellSection {
    fn default() -> Self {
        Self {
            amplitude: 1.01,
            amplitudes: StepRange {
                start: 0.3,
                stop: 2.0,
                step: 0.05,
            },
            restarts: DEFAULT_RESTARTS,
            tolerance_a_rel: DEFAULT_TOLERANCE_A_REL,
            tolerance_alpha: DEFAULT_TOLERANCE_ALPHA,
            tolerance_beta: DEFAULT_TOLERANCE_BETA,
            simulate: true,
            budget: BellBudget::default(),
        }
    }
}

impl BellSection {
    pub fn tolerances(&self) -> (f64, f64, f64) {
        (
            self.tolerance_a_rel,
            self.tolerance_alpha,
            self.tolerance_beta,
        )
    }
}

/// One raw TDC acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub d: i32,
    pub budget: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            a: MAX_EXPERIMENTAL_AMPLITUDE,
            b: MAX_EXPERIMENTAL_AMPLITUDE,
            delta: PI,
            d: 0,
            budget: DEFAULT_COUNT_BUDGET,
        }
    }
}

fn positive(name: &str, x: f64) -> anyhow::Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("{name} must be positive, got {x}");
    }
    Ok(())
}

fn amplitude(name: &str, x: f64) -> anyhow::Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        bail!("{name} must be a non-negative amplitude, got {x}");
    }
    Ok(())
}

fn finite(name: &str, x: f64) -> anyhow::Result<()> {
    if !x.is_finite() {
        bail!("{name} must be finite");
    }
    Ok(())
}

fn d_list(name: &str, d: &[i32]) -> anyhow::Result<()> {
    if d.is_empty() {
        bail!("{name} must list at least one bin offset");
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let config: Self = serde_json::from_str(text).context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration always serializes")
    }

    /// SHA-256 of the compact serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration always serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        self.experiment.validate().context("experiment")?;

        let s = &self.spectrum;
        amplitude("spectrum.amplitude", s.amplitude)?;
        finite("spectrum.rf_phase", s.rf_phase)?;
        positive("spectrum.min_weight", s.min_weight)?;
        if s.max_order == Some(0) {
            bail!("spectrum.max_order must be at least 1");
        }

        let s = &self.scan_amplitude;
        d_list("scan_amplitude.d", &s.d)?;
        s.amplitudes.validate("scan_amplitude.amplitudes")?;
        amplitude("scan_amplitude.amplitudes.start", s.amplitudes.start)?;
        positive("scan_amplitude.curve_step", s.curve_step)?;
        finite("scan_amplitude.delta", s.delta)?;
        positive("scan_amplitude.budget", s.budget)?;

        let s = &self.scan_phase;
        d_list("scan_phase.d", &s.d)?;
        amplitude("scan_phase.amplitude", s.amplitude)?;
        if s.points < 2 || s.curve_points < 2 {
            bail!("scan_phase.points and scan_phase.curve_points must be at least 2");
        }
        positive("scan_phase.budget", s.budget)?;

        let s = &self.visibility;
        positive("visibility.a", s.a)?;
        positive("visibility.b", s.b)?;
        positive("visibility.budget", s.budget)?;

        let s = &self.bell;
        positive("bell.amplitude", s.amplitude)?;
        s.amplitudes.validate("bell.amplitudes")?;
        positive("bell.amplitudes.start", s.amplitudes.start)?;
        if s.restarts == 0 {
            bail!("bell.restarts must be at least 1");
        }
        for (name, t) in [
            ("bell.tolerance_a_rel", s.tolerance_a_rel),
            ("bell.tolerance_alpha", s.tolerance_alpha),
            ("bell.tolerance_beta", s.tolerance_beta),
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                bail!("{name} must be non-negative");
            }
        }
        positive("bell.budget.term_counts", s.budget.term_counts)?;
        positive("bell.budget.reference_counts", s.budget.reference_counts)?;

        let s = &self.simulate;
        amplitude("simulate.a", s.a)?;
        amplitude("simulate.b", s.b)?;
        finite("simulate.delta", s.delta)?;
        positive("simulate.budget", s.budget)?;
        Ok(())
    }
}
