//! Scenario execution. Every command returns its datasets and a summary for
//! the manifest; nothing touches the filesystem here.

use std::f64::consts::TAU;

use freqbin_core::bell::{bell_scan_point, s_statistic, BellScanRow, Evaluation};
use freqbin_core::biphoton::{q, visibility};
use freqbin_core::experiment::{
    amplitude_points, derive_seed, estimate_from_counts, phase_points, run_scan_point,
    scan_reference, simulate_run, simulated_visibility, ExperimentSpec, ScanPoint, ScanRow,
};
use freqbin_core::{bessel_j, sideband_coefficient, ModulatorSettings};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::ScenarioConfig;
use crate::output::Dataset;

pub struct RunOutput {
    pub datasets: Vec<Dataset>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub order: i32,
    pub offset_hz: f64,
    pub weight: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub d: i32,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub q_analytic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityRow {
    pub a: f64,
    pub b: f64,
    pub visibility: f64,
    pub q_max: f64,
    pub q_min: f64,
    pub delta_min: f64,
    pub visibility_raw: f64,
    pub visibility_subtracted: f64,
    pub n_max: u64,
    pub n_min: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellRow {
    pub amplitude: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub q11: f64,
    pub q12: f64,
    pub q21: f64,
    pub q22: f64,
    pub s_nominal: f64,
    pub s_worst: f64,
    pub s_simulated: Option<f64>,
    pub s_sigma: Option<f64>,
    pub significance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bin: usize,
    pub time_ns: f64,
    pub counts: u64,
    pub peak: bool,
}

pub fn spectrum(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let s = &config.spectrum;
    let settings = ModulatorSettings::with_frequency(
        s.amplitude,
        s.rf_phase,
        config.experiment.grid.spacing(),
    )?;
    let max_order = match s.max_order {
        Some(m) => m,
        None => {
            let mut m = 1;
            for p in 1..=120 {
                if bessel_j(p, settings.amplitude())?.powi(2) >= s.min_weight {
                    m = p as usize;
                }
            }
            m
        }
    };
    let m = max_order as i32;
    let rows = (-m..=m)
        .map(|p| {
            let c = sideband_coefficient(&settings, p)?.value;
            Ok(SpectrumRow {
                order: p,
                offset_hz: p as f64 * settings.rf_frequency(),
                weight: c.norm_sqr(),
                re: c.re,
                im: c.im,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let captured: f64 = rows.iter().map(|r| r.weight).sum();
    Ok(RunOutput {
        datasets: vec![Dataset::from_rows("spectrum.csv", &rows)?],
        summary: json!({ "max_order": max_order, "captured_weight": captured }),
    })
}

/// Simulated points in grid order; the reference run and every point have
/// their own seed streams, so scheduling cannot change the result.
fn simulate_points(
    exp: &ExperimentSpec,
    points: &[ScanPoint],
    budget: f64,
    seed: u64,
) -> anyhow::Result<Vec<ScanRow>> {
    let duration = exp.duration_for_budget(budget);
    let reference = scan_reference(exp, duration, seed)?;
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_scan_point(exp, p, &reference, duration, seed, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}

fn curve(points: &[ScanPoint]) -> anyhow::Result<Vec<CurveRow>> {
    points
        .iter()
        .map(|p| {
            Ok(CurveRow {
                d: p.d,
                a: p.a,
                b: p.b,
                delta: p.delta,
                q_analytic: q(p.a, p.b, p.delta, p.d)?,
            })
        })
        .collect()
}

fn within_three_sigma(rows: &[ScanRow]) -> f64 {
    let ok = rows
        .iter()
        .filter(|r| (r.q_tilde - r.q_analytic).abs() <= 3.0 * r.q_sigma)
        .count();
    ok as f64 / rows.len() as f64
}

pub fn scan_amplitude(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let s = &config.scan_amplitude;
    let grid = s.amplitudes.values();
    let rows = simulate_points(
        &config.experiment,
        &amplitude_points(&s.d, &grid, s.delta),
        s.budget,
        config.seed,
    )?;
    let dense =
        freqbin_core::bell::linspace_step(s.amplitudes.start, s.amplitudes.stop, s.curve_step);
    let curve_rows = curve(&amplitude_points(&s.d, &dense, s.delta))?;
    Ok(RunOutput {
        summary: json!({ "points": rows.len(), "fraction_within_3_sigma": within_three_sigma(&rows) }),
        datasets: vec![
            Dataset::from_rows("scan-amplitude.csv", &rows)?,
            Dataset::from_rows("scan-amplitude_curve.csv", &curve_rows)?,
        ],
    })
}

fn phase_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| k as f64 * TAU / (points - 1) as f64)
        .collect()
}

pub fn scan_phase(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let s = &config.scan_phase;
    let points = phase_points(&s.d, s.amplitude, &phase_grid(s.points));
    let rows = simulate_points(&config.experiment, &points, s.budget, config.seed)?;
    let curve_rows = curve(&phase_points(
        &s.d,
        s.amplitude,
        &phase_grid(s.curve_points),
    ))?;
    Ok(RunOutput {
        summary: json!({
            "points": rows.len(),
            "fraction_within_3_sigma": within_three_sigma(&rows),
            "raw_visibility_d0": freqbin_core::experiment::visibility_from_rows(&rows),
        }),
        datasets: vec![
            Dataset::from_rows("scan-phase.csv", &rows)?,
            Dataset::from_rows("scan-phase_curve.csv", &curve_rows)?,
        ],
    })
}

pub fn visibility_command(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let s = &config.visibility;
    let analytic = visibility(s.a, s.b)?;
    let sim = simulated_visibility(&config.experiment, s.a, s.b, s.budget, config.seed)?;
    let row = VisibilityRow {
        a: s.a,
        b: s.b,
        visibility: analytic.visibility,
        q_max: analytic.q_max,
        q_min: analytic.q_min,
        delta_min: analytic.delta_min,
        visibility_raw: sim.raw,
        visibility_subtracted: sim.subtracted,
        n_max: sim.n_max,
        n_min: sim.n_min,
    };
    Ok(RunOutput {
        summary: json!({
            "visibility": row.visibility,
            "visibility_raw": row.visibility_raw,
            "diagnostic": analytic.diagnostic.map(|d| d.to_string()),
        }),
        datasets: vec![Dataset::from_rows("visibility.csv", &[row])?],
    })
}

fn bell_row(row: &BellScanRow) -> anyhow::Result<BellRow> {
    let analytic = s_statistic(&row.config, Evaluation::Analytic)?;
    let [q11, q12, q21, q22] = analytic.term_values;
    let c = &row.config;
    Ok(BellRow {
        amplitude: row.amplitude,
        alpha1: c.alpha1,
        alpha2: c.alpha2,
        beta1: c.beta1,
        beta2: c.beta2,
        q11,
        q12,
        q21,
        q22,
        s_nominal: row.s_nominal,
        s_worst: row.s_worst,
        s_simulated: row.simulated.map(|r| r.s_value),
        s_sigma: row.simulated.and_then(|r| r.s_sigma),
        significance: row.simulated.and_then(|r| r.significance),
    })
}

fn bell_point(config: &ScenarioConfig, a: f64, seed: u64) -> anyhow::Result<BellRow> {
    let b = &config.bell;
    let simulate = b.simulate.then_some((&config.experiment, b.budget));
    bell_row(&bell_scan_point(
        a,
        b.restarts,
        seed,
        b.tolerances(),
        simulate,
    )?)
}

pub fn bell_optimize(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let row = bell_point(config, config.bell.amplitude, config.seed)?;
    Ok(RunOutput {
        summary: json!({
            "s_nominal": row.s_nominal,
            "s_worst": row.s_worst,
            "significance": row.significance,
        }),
        datasets: vec![Dataset::from_rows("bell-optimize.csv", &[row])?],
    })
}

pub fn bell_scan(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let amplitudes = config.bell.amplitudes.values();
    let rows = amplitudes
        .par_iter()
        .enumerate()
        .map(|(i, &a)| bell_point(config, a, derive_seed(config.seed, i as u64)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .map(|r| r.s_nominal)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RunOutput {
        summary: json!({ "points": rows.len(), "max_s_nominal": best }),
        datasets: vec![Dataset::from_rows("bell-scan.csv", &rows)?],
    })
}

pub fn simulate(config: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let s = &config.simulate;
    let exp = &config.experiment;
    let a_set = ModulatorSettings::new(s.a, 0.0)?;
    let b_set = ModulatorSettings::new(s.b, -s.delta)?;
    let duration = exp.duration_for_budget(s.budget);
    let hist = simulate_run(
        exp,
        &a_set,
        &b_set,
        s.d,
        duration,
        derive_seed(config.seed, 0),
    )?;
    let reference = scan_reference(exp, duration, config.seed)?;
    let est = estimate_from_counts(&hist.peak_counts()?, &reference)?;
    let rows: Vec<HistogramRow> = hist
        .counts
        .iter()
        .enumerate()
        .map(|(i, &counts)| HistogramRow {
            bin: i,
            time_ns: (i as f64 - hist.peak_index as f64) * hist.bin_width,
            counts,
            peak: i == hist.peak_index,
        })
        .collect();
    let estimate = ScanRow {
        d: s.d,
        a: s.a,
        b: s.b,
        delta: s.delta,
        q_analytic: q(s.a, s.b, s.delta, s.d)?,
        q_tilde: est.q_tilde,
        q_sigma: est.q_sigma,
        n_coinc: est.n_coinc,
        n_acc: est.n_acc,
    };
    Ok(RunOutput {
        summary: json!({ "duration_s": duration, "snr": est.snr, "q_tilde": est.q_tilde, "q_sigma": est.q_sigma }),
        datasets: vec![
            Dataset::from_rows("simulate_histogram.csv", &rows)?,
            Dataset::from_rows("simulate.csv", &[estimate])?,
        ],
    })
}
