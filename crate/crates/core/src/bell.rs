//! Clauser-Horne statistic for frequency-bin measurements.
//!
//! Outcome "0" is a detection in the bin centred on the pair centre frequency.
//! With the single-side marginals equated to the unmodulated coincidence rate,
//! the Clauser-Horne inequality normalizes to
//! `S = Q11 + Q12 + Q21 − Q22 <= 2`, where `Qij = Q(0|a_i, b_j, α_i − β_j)`.
//! Quantum mechanics allows up to `2√2`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Unused whenever std is linked into the build, which supplies the inherent methods.
#[allow(unused_imports)]
use num_traits::Float;

use crate::bessel;
use crate::biphoton::{self, CoincidenceModel};
use crate::error::{Error, Result};
use crate::experiment::{self, derive_seed, ExperimentSpec, PeakCounts};
use crate::modulator::{wrap_phase, ModulatorSettings};
use crate::optim::{compass_search, CompassOptions};

/// Local hidden-variable bound of the normalized statistic.
pub const LHV_BOUND: f64 = 2.0;
/// Largest value reachable with a maximally entangled state.
pub const QUANTUM_BOUND: f64 = 2.0 * core::f64::consts::SQRT_2;

pub const DEFAULT_TOLERANCE_A_REL: f64 = 1e-2;
pub const DEFAULT_TOLERANCE_ALPHA: f64 = 5e-2;
pub const DEFAULT_TOLERANCE_BETA: f64 = 10e-2;
pub const DEFAULT_RESTARTS: usize = 32;

/// Four measurement settings plus the uncertainty box used for worst-case
/// analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BellConfig {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_tol_a"))]
    pub tolerance_a_rel: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_tol_alpha"))]
    pub tolerance_alpha: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_tol_beta"))]
    pub tolerance_beta: f64,
}

#[cfg(feature = "serde")]
fn default_tol_a() -> f64 {
    DEFAULT_TOLERANCE_A_REL
}
#[cfg(feature = "serde")]
fn default_tol_alpha() -> f64 {
    DEFAULT_TOLERANCE_ALPHA
}
#[cfg(feature = "serde")]
fn default_tol_beta() -> f64 {
    DEFAULT_TOLERANCE_BETA
}

impl BellConfig {
    /// All four amplitudes equal to `a`; phases `[α1, α2, β1, β2]`.
    pub fn equal_amplitudes(a: f64, phases: [f64; 4]) -> Result<Self> {
        Self {
            a1: a,
            a2: a,
            b1: a,
            b2: a,
            alpha1: phases[0],
            alpha2: phases[1],
            beta1: phases[2],
            beta2: phases[3],
            tolerance_a_rel: DEFAULT_TOLERANCE_A_REL,
            tolerance_alpha: DEFAULT_TOLERANCE_ALPHA,
            tolerance_beta: DEFAULT_TOLERANCE_BETA,
        }
        .normalized()
    }

    /// Validates amplitudes and tolerances and wraps phases into `[0, 2π)`.
    pub fn normalized(mut self) -> Result<Self> {
        for a in [self.a1, self.a2, self.b1, self.b2] {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "amplitude",
                    reason: "must be finite and non-negative",
                });
            }
        }
        for t in [
            self.tolerance_a_rel,
            self.tolerance_alpha,
            self.tolerance_beta,
        ] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "tolerance",
                    reason: "must be finite and non-negative",
                });
            }
        }
        for p in [
            &mut self.alpha1,
            &mut self.alpha2,
            &mut self.beta1,
            &mut self.beta2,
        ] {
            if !p.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "phase",
                    reason: "must be finite",
                });
            }
            *p = wrap_phase(*p);
        }
        Ok(self)
    }

    pub fn with_tolerances(mut self, a_rel: f64, alpha: f64, beta: f64) -> Self {
        self.tolerance_a_rel = a_rel;
        self.tolerance_alpha = alpha;
        self.tolerance_beta = beta;
        self
    }

    pub fn phases(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
    }

    /// Alice's setting `i` (1 or 2).
    pub fn alice(&self, i: usize) -> Result<ModulatorSettings> {
        match i {
            1 => ModulatorSettings::new(self.a1, self.alpha1),
            _ => ModulatorSettings::new(self.a2, self.alpha2),
        }
    }

    /// Bob's setting `j` (1 or 2).
    pub fn bob(&self, j: usize) -> Result<ModulatorSettings> {
        match j {
            1 => ModulatorSettings::new(self.b1, self.beta1),
            _ => ModulatorSettings::new(self.b2, self.beta2),
        }
    }

    fn params(&self) -> [f64; 8] {
        [
            self.a1,
            self.a2,
            self.b1,
            self.b2,
            self.alpha1,
            self.alpha2,
            self.beta1,
            self.beta2,
        ]
    }

    fn with_params(&self, p: &[f64]) -> Self {
        Self {
            a1: p[0],
            a2: p[1],
            b1: p[2],
            b2: p[3],
            alpha1: p[4],
            alpha2: p[5],
            beta1: p[6],
            beta2: p[7],
            ..*self
        }
    }
}

/// Term order of [`BellResult::term_values`].
pub const TERMS: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BellResult {
    pub s_value: f64,
    /// `[Q11, Q12, Q21, Q22]`
    pub term_values: [f64; 4],
    /// Standard error, for simulated evaluations.
    pub s_sigma: Option<f64>,
    /// `(S − 2)/σ_S`, for simulated evaluations.
    pub significance: Option<f64>,
}

impl BellResult {
    fn from_terms(term_values: [f64; 4], s_sigma: Option<f64>) -> Self {
        let [q11, q12, q21, q22] = term_values;
        let s_value = q11 + q12 + q21 - q22;
        let significance = s_sigma
            .filter(|&s| s > 0.0)
            .map(|s| (s_value - LHV_BOUND) / s);
        Self {
            s_value,
            term_values,
            s_sigma,
            significance,
        }
    }
}

/// Count budgets of a simulated Bell run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BellBudget {
    /// Expected true coincidences collected for each of the four terms.
    pub term_counts: f64,
    /// Expected true coincidences of each term's normalization run.
    pub reference_counts: f64,
}

impl Default for BellBudget {
    fn default() -> Self {
        Self {
            term_counts: 1e3,
            reference_counts: 1e4,
        }
    }
}

/// How the four terms are obtained.
#[derive(Debug, Clone, Copy)]
pub enum Evaluation<'a> {
    Analytic,
    Simulated {
        experiment: &'a ExperimentSpec,
        budget: BellBudget,
        seed: u64,
    },
}

/// `Q(0|a, b, α − β)` for one pair of settings.
pub fn ch_term(setting_a: &ModulatorSettings, setting_b: &ModulatorSettings) -> Result<f64> {
    biphoton::coincidence_probability(setting_a, setting_b, 0)
}

/// Empirical term from a run and its normalization run.
pub fn ch_term_estimated(
    run: &PeakCounts,
    reference: &PeakCounts,
) -> Result<experiment::RunResult> {
    experiment::estimate_from_counts(run, reference)
}

fn analytic_terms(config: &BellConfig) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, &(i, j)) in TERMS.iter().enumerate() {
        out[k] = ch_term(&config.alice(i)?, &config.bob(j)?)?;
    }
    Ok(out)
}

/// Fastest route to `Q(0|a, b, Δ) = J_0(√(a² + b² + 2ab cos Δ))²`.
fn q0_closed(a: f64, b: f64, delta: f64) -> f64 {
    let c = biphoton::effective_modulation(a, b, delta).amplitude;
    match bessel::bessel_j(0, c) {
        Ok(j) => j * j,
        Err(_) => f64::NAN,
    }
}

/// `S` evaluated with the closed form of each term.
pub fn s_closed_form(config: &BellConfig) -> f64 {
    let p = config.params();
    s_closed_params(&p)
}

fn s_closed_params(p: &[f64]) -> f64 {
    let (a, b, alpha, beta) = ([p[0], p[1]], [p[2], p[3]], [p[4], p[5]], [p[6], p[7]]);
    let q = |i: usize, j: usize| q0_closed(a[i], b[j], alpha[i] - beta[j]);
    q(0, 0) + q(0, 1) + q(1, 0) - q(1, 1)
}

pub fn s_statistic(config: &BellConfig, mode: Evaluation<'_>) -> Result<BellResult> {
    let config = config.normalized()?;
    match mode {
        Evaluation::Analytic => Ok(BellResult::from_terms(analytic_terms(&config)?, None)),
        Evaluation::Simulated {
            experiment,
            budget,
            seed,
        } => simulate_s(&config, experiment, budget, seed),
    }
}

fn simulate_s(
    config: &BellConfig,
    exp: &ExperimentSpec,
    budget: BellBudget,
    seed: u64,
) -> Result<BellResult> {
    if !(budget.term_counts > 0.0 && budget.reference_counts > 0.0) {
        return Err(Error::InvalidParameter {
            name: "budget",
            reason: "count budgets must be positive",
        });
    }
    let max_rate = exp.max_coincidence_rate();
    let reference_duration = budget.reference_counts / max_rate;
    let mut terms = [0.0; 4];
    let mut variance = 0.0;
    for (k, &(i, j)) in TERMS.iter().enumerate() {
        let model = CoincidenceModel::new(&config.alice(i)?, &config.bob(j)?)?;
        // acquisition time sized from the expected rate, floored to keep it finite
        let expected_q = model.probability(0).max(1e-2);
        let duration = budget.term_counts / (max_rate * expected_q);
        let run = experiment::simulate_with_model(
            exp,
            &model,
            0,
            duration,
            derive_seed(seed, 2 * k as u64),
        )?;
        let reference = experiment::reference_run(
            exp,
            reference_duration,
            derive_seed(seed, 2 * k as u64 + 1),
        )?;
        let est = ch_term_estimated(&run.peak_counts()?, &reference.peak_counts()?)?;
        terms[k] = est.q_tilde;
        variance += est.q_sigma * est.q_sigma;
    }
    Ok(BellResult::from_terms(terms, Some(variance.sqrt())))
}

pub fn violation_significance(result: &BellResult) -> Result<f64> {
    match result.s_sigma {
        Some(s) if s > 0.0 => Ok((result.s_value - LHV_BOUND) / s),
        _ => Err(Error::UndefinedSignificance),
    }
}

/// Maximizes the analytic `S` over `(α2, β1, β2)` with `a1 = a2 = b1 = b2 = a`
/// and `α1 = 0`.
///
/// Every restart starts from a uniformly random phase triple drawn from its
/// own seed stream and runs a compass search to a step of `1e-9` rad. The best
/// restart wins, earlier index on ties, so the result is non-decreasing in
/// `restarts` for a fixed seed.
pub fn optimize_phases(a: f64, restarts: usize, seed: u64) -> Result<(BellConfig, BellResult)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            reason: "must be positive",
        });
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter {
            name: "restarts",
            reason: "must be at least 1",
        });
    }
    // surface domain errors before searching
    q0_checked(a)?;
    let objective = |x: &[f64]| -s_closed_params(&[a, a, a, a, 0.0, x[0], x[1], x[2]]);
    let opts = CompassOptions {
        initial_step: 0.5,
        min_step: 1e-9,
        ..CompassOptions::default()
    };
    let mut best: Option<([f64; 3], f64)> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let mut x = [
            rng.random::<f64>() * TAU,
            rng.random::<f64>() * TAU,
            rng.random::<f64>() * TAU,
        ];
        let v = compass_search(objective, &mut x, None, opts);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((x, v));
        }
    }
    let (x, _) = best.expect("at least one restart");
    let config = BellConfig::equal_amplitudes(a, [0.0, x[0], x[1], x[2]])?;
    let result = s_statistic(&config, Evaluation::Analytic)?;
    Ok((config, result))
}

fn q0_checked(a: f64) -> Result<()> {
    bessel::bessel_j(0, 2.0 * a).map(|_| ())
}

/// Outcome of [`worst_case_s`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    /// Smallest `S` found inside the tolerance box.
    pub s_worst: f64,
    /// Smallest `S` over the `3^8` grid of corners and face centres.
    pub s_corner: f64,
    /// Settings at which `s_worst` occurs.
    pub config: BellConfig,
}

/// Minimizes the analytic `S` over the box `a_i (1 ± tol_a)`, `b_j (1 ± tol_a)`,
/// `α_i ± tol_α`, `β_j ± tol_β`.
///
/// The `3^8` grid over `{−1, 0, +1}` half-widths per parameter is scanned
/// first; its minimum is a guaranteed upper bound on the true worst case. A
/// box-constrained compass descent then continues from the worst grid point.
pub fn worst_case_s(config: &BellConfig) -> Result<WorstCase> {
    let config = config.normalized()?;
    let nominal = config.params();
    let half = [
        config.a1 * config.tolerance_a_rel,
        config.a2 * config.tolerance_a_rel,
        config.b1 * config.tolerance_a_rel,
        config.b2 * config.tolerance_a_rel,
        config.tolerance_alpha,
        config.tolerance_alpha,
        config.tolerance_beta,
        config.tolerance_beta,
    ];
    // domain check on the largest amplitudes of the box
    let a_max = nominal[..4]
        .iter()
        .zip(&half[..4])
        .map(|(a, h)| a + h)
        .fold(0.0, f64::max);
    bessel::bessel_j(0, 2.0 * a_max)?;

    let point = |u: &[f64]| -> [f64; 8] {
        let mut p = nominal;
        for k in 0..8 {
            p[k] += u[k] * half[k];
        }
        p
    };
    let mut worst_u = [0.0; 8];
    let mut worst = s_closed_params(&nominal);
    let mut u = [0.0; 8];
    for code in 0..3usize.pow(8) {
        let mut c = code;
        for uk in u.iter_mut() {
            *uk = (c % 3) as f64 - 1.0;
            c /= 3;
        }
        let v = s_closed_params(&point(&u));
        if v < worst {
            worst = v;
            worst_u = u;
        }
    }
    let s_corner = worst;
    let bounds = [(-1.0, 1.0); 8];
    let mut x = worst_u;
    compass_search(
        |u| s_closed_params(&point(u)),
        &mut x,
        Some(&bounds),
        CompassOptions {
            initial_step: 0.5,
            min_step: 1e-9,
            ..CompassOptions::default()
        },
    );
    let worst_config = config.with_params(&point(&x));
    let s_series = s_statistic(&worst_config, Evaluation::Analytic)?.s_value;
    Ok(WorstCase {
        s_worst: s_series.min(s_corner),
        s_corner,
        config: worst_config,
    })
}

fn angular_distance(x: f64, y: f64) -> f64 {
    let d = wrap_phase(x - y);
    d.min(TAU - d)
}

fn gauge_fixed(p: [f64; 4]) -> [f64; 4] {
    p.map(|x| wrap_phase(x - p[0]))
}

/// Largest phase difference between two quadruples `[α1, α2, β1, β2]`, after
/// removing the symmetries that leave every term of `S` unchanged: a common
/// phase shift, negation of all phases and exchange of Alice and Bob.
pub fn phase_mismatch(found: [f64; 4], reference: [f64; 4]) -> f64 {
    let target = gauge_fixed(reference);
    let negate = |p: [f64; 4]| p.map(|x| -x);
    let exchange = |p: [f64; 4]| [p[2], p[3], p[0], p[1]];
    [
        found,
        negate(found),
        exchange(found),
        negate(exchange(found)),
    ]
    .into_iter()
    .map(|cand| {
        let c = gauge_fixed(cand);
        (0..4)
            .map(|k| angular_distance(c[k], target[k]))
            .fold(0.0, f64::max)
    })
    .fold(f64::INFINITY, f64::min)
}

/// Outcome of the exhaustive local-deterministic check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhvReport {
    /// Number of deterministic strategies enumerated.
    pub strategies: usize,
    /// `max [P(00|A1B1) + P(00|A1B2) + P(00|A2B1) − P(00|A2B2) − P(0|A1) − P(0|B1)]`
    pub max_ch_excess: f64,
    /// Largest `S` among strategies whose marginals satisfy
    /// `P(0|A1) = P(0|B1) > 0`.
    pub max_normalized_s: f64,
}

/// Enumerates every deterministic local strategy with binary outcomes.
///
/// Mixtures of these strategies are all local hidden-variable models, and
/// the Clauser-Horne expression is linear in the mixture weights, so its
/// maximum over strategies is the classical maximum.
pub fn lhv_enumeration() -> LhvReport {
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_s = f64::NEG_INFINITY;
    let mut strategies = 0;
    for code in 0u8..16 {
        strategies += 1;
        // bit set means outcome 0 (photon found in the centre bin)
        let hit = |bit: u8| f64::from((code >> bit) & 1);
        let (a1, a2, b1, b2) = (hit(0), hit(1), hit(2), hit(3));
        let ch = a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2;
        max_excess = max_excess.max(ch - a1 - b1);
        if a1 == b1 && a1 > 0.0 {
            max_s = max_s.max(ch / a1);
        }
    }
    LhvReport {
        strategies,
        max_ch_excess: max_excess,
        max_normalized_s: max_s,
    }
}

/// CH value of a mixture of the 16 deterministic strategies, returning
/// `(CH, P(0|A1), P(0|B1))`.
pub fn lhv_mixture(weights: &[f64; 16]) -> (f64, f64, f64) {
    let total: f64 = weights.iter().sum();
    let mut ch = 0.0;
    let mut ma = 0.0;
    let mut mb = 0.0;
    for (code, w) in weights.iter().enumerate() {
        let w = w / total;
        let hit = |bit: usize| ((code >> bit) & 1) as f64;
        let (a1, a2, b1, b2) = (hit(0), hit(1), hit(2), hit(3));
        ch += w * (a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2);
        ma += w * a1;
        mb += w * b1;
    }
    (ch, ma, mb)
}

/// Optimized and worst-case `S` for one amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellScanRow {
    pub amplitude: f64,
    pub config: BellConfig,
    pub s_nominal: f64,
    pub s_worst: f64,
    pub simulated: Option<BellResult>,
}

/// One row of the `S(a)` curve: optimizes phases, then evaluates the
/// tolerance box and, when an experiment is given, a simulated run.
pub fn bell_scan_point(
    a: f64,
    restarts: usize,
    seed: u64,
    tolerances: (f64, f64, f64),
    simulate: Option<(&ExperimentSpec, BellBudget)>,
) -> Result<BellScanRow> {
    let (config, result) = optimize_phases(a, restarts, seed)?;
    let config = config.with_tolerances(tolerances.0, tolerances.1, tolerances.2);
    let worst = worst_case_s(&config)?;
    let simulated = match simulate {
        Some((experiment, budget)) => Some(s_statistic(
            &config,
            Evaluation::Simulated {
                experiment,
                budget,
                seed: derive_seed(seed, 1 << 32),
            },
        )?),
        None => None,
    };
    Ok(BellScanRow {
        amplitude: a,
        config,
        s_nominal: result.s_value,
        s_worst: worst.s_worst,
        simulated,
    })
}

/// Phase quadruples reported for the optimized settings, keyed by amplitude.
pub const REFERENCE_OPTIMA: [(f64, [f64; 4]); 4] = [
    (0.51, [0.0, 1.42, 3.85, 2.43]),
    (1.01, [0.0, 1.02, 3.65, 2.63]),
    (1.50, [0.0, 0.72, 3.50, 2.78]),
    (1.95, [0.0, 0.56, 3.42, 2.86]),
];

/// Evenly spaced values `start, start + step, …` up to `stop` inclusive.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}
