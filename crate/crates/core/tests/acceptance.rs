//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use common::{phase_grid, series_j, AMPLITUDES};
use freqbin_core::bell::{
    lhv_enumeration, linspace_step, optimize_phases, phase_mismatch, s_statistic, worst_case_s,
    BellBudget, BellConfig, Evaluation, DEFAULT_RESTARTS, LHV_BOUND, REFERENCE_OPTIMA,
    QUANTUM_BOUND,
};
use freqbin_core::biphoton::{default_max_d, distribution, q, visibility};
use freqbin_core::experiment::{
    derive_seed, scan_amplitude, scan_phase, simulated_visibility, ExperimentSpec,
    DEFAULT_COUNT_BUDGET,
};
use freqbin_core::ModulatorSettings;

const IDENTITY_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-10;
const ELEVEN_BIN_THRESHOLD: f64 = 1e-3;
const DATASET_SIGMAS: f64 = 3.0;
const DATASET_MIN_FRACTION: f64 = 0.95;
const VISIBILITY_TOL: f64 = 1e-9;
const SIMULATED_VISIBILITY: (f64, f64) = (0.96, 1.00);
const PHASE_MATCH_TOL: f64 = 0.02;
const MIN_SIGNIFICANCE: f64 = 5.0;
const SEEDS: u64 = 20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn set(a: f64, phase: f64) -> ModulatorSettings {
    ModulatorSettings::new(a, phase).unwrap()
}

fn identities() -> Outcome {
    let mut worst_off: f64 = 0.0;
    for &delta in &phase_grid() {
        for d in -10..=10 {
            let expect = if d == 0 { 1.0 } else { 0.0 };
            worst_off = worst_off.max((q(0.0, 0.0, delta, d).unwrap() - expect).abs());
        }
    }
    let mut worst_pi: f64 = 0.0;
    for a in [0.3, 1.0, 2.74] {
        worst_pi = worst_pi.max((q(a, a, PI, 0).unwrap() - 1.0).abs());
        for d in (-10..=10).filter(|&d| d != 0) {
            worst_pi = worst_pi.max(q(a, a, PI, d).unwrap());
        }
    }
    check(
        worst_off == 0.0 && worst_pi <= IDENTITY_TOL,
        format!("unmodulated deviation {worst_off:.1e}, opposite-phase deviation {worst_pi:.1e}"),
    )
}

fn normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for &a in &AMPLITUDES {
        for &b in &AMPLITUDES {
            for &delta in &phase_grid() {
                let max_d = default_max_d(a, b).unwrap();
                let dist = distribution(&set(a, 0.0), &set(b, -delta), max_d).unwrap();
                worst = worst.max((dist.total() - 1.0).abs());
                cells += 1;
            }
        }
    }
    check(
        worst <= NORMALIZATION_TOL,
        format!("{cells} grid cells, max |Σ Q − 1| = {worst:.1e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for &a in &AMPLITUDES {
        for &b in &AMPLITUDES {
            for &delta in &phase_grid() {
                let c = (a * a + b * b + 2.0 * a * b * delta.cos()).max(0.0).sqrt();
                let dist = distribution(&set(a, 0.0), &set(b, -delta), 12).unwrap();
                for d in -12..=12 {
                    worst = worst.max((dist.amplitude(d).norm() - series_j(d, c).abs()).abs());
                }
            }
        }
    }
    check(
        worst <= ORACLE_TOL,
        format!("max ||c_d| − |J_d(c_eff)|| = {worst:.1e}"),
    )
}

fn eleven_bins() -> Outcome {
    let values: Vec<(i32, f64)> = (-5..=5)
        .map(|d| (d, q(2.74, 2.74, 0.0, d).unwrap()))
        .collect();
    let below: Vec<String> = values
        .iter()
        .filter(|&&(_, v)| v <= ELEVEN_BIN_THRESHOLD)
        .map(|&(d, v)| format!("Q({d}) = {v:.3e}"))
        .collect();
    check(
        below.is_empty(),
        if below.is_empty() {
            "all |d| <= 5 above threshold".to_string()
        } else {
            format!("below {ELEVEN_BIN_THRESHOLD:e}: {}", below.join(", "))
        },
    )
}

fn datasets() -> Outcome {
    let exp = ExperimentSpec::default();
    let d_list: Vec<i32> = (0..=5).collect();
    // dense analytic curves
    let a_dense = linspace_step(0.0, 2.74, 0.01);
    let delta_dense: Vec<f64> = (0..=360).map(|k| k as f64 * TAU / 360.0).collect();
    let mut curve_points = 0;
    for &d in &d_list {
        for &a in &a_dense {
            let v = q(a, a, 0.0, d).unwrap();
            if !(0.0..=1.0 + 1e-12).contains(&v) {
                return Err(format!("analytic curve out of range at d={d}, a={a}"));
            }
            curve_points += 1;
        }
        for &delta in &delta_dense {
            let v = q(2.74, 2.74, delta, d).unwrap();
            if !(0.0..=1.0 + 1e-12).contains(&v) {
                return Err(format!("analytic curve out of range at d={d}, Δ={delta}"));
            }
            curve_points += 1;
        }
    }
    let a_grid = linspace_step(0.0, 2.74, 0.137);
    let delta_grid: Vec<f64> = (0..=24).map(|k| k as f64 * TAU / 24.0).collect();
    let mut rows = scan_amplitude(&exp, &d_list, &a_grid, 0.0, DEFAULT_COUNT_BUDGET, 2).unwrap();
    rows.extend(scan_phase(&exp, &d_list, 2.74, &delta_grid, DEFAULT_COUNT_BUDGET, 3).unwrap());
    let within = rows
        .iter()
        .filter(|r| (r.q_tilde - r.q_analytic).abs() <= DATASET_SIGMAS * r.q_sigma)
        .count();
    let fraction = within as f64 / rows.len() as f64;
    check(
        fraction >= DATASET_MIN_FRACTION,
        format!(
            "{curve_points} analytic points; {within}/{} simulated points within 3σ ({:.1}%)",
            rows.len(),
            100.0 * fraction
        ),
    )
}

fn visibility_criterion() -> Outcome {
    let analytic = visibility(2.74, 2.74).unwrap();
    let exp = ExperimentSpec::default();
    let mut raw: Vec<f64> = (0..SEEDS)
        .map(|s| {
            simulated_visibility(&exp, 2.74, 2.74, DEFAULT_COUNT_BUDGET, derive_seed(6, s))
                .unwrap()
                .raw
        })
        .collect();
    raw.sort_by(f64::total_cmp);
    let median = (raw[9] + raw[10]) / 2.0;
    let (lo, hi) = SIMULATED_VISIBILITY;
    check(
        (analytic.visibility - 1.0).abs() <= VISIBILITY_TOL && (lo..=hi).contains(&median),
        format!(
            "analytic V = {:.12}, simulated median V = {median:.4} (range {:.4}..{:.4} over {SEEDS} seeds)",
            analytic.visibility,
            raw[0],
            raw[raw.len() - 1]
        ),
    )
}

fn optimizer_regression() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, &(a, reference)) in REFERENCE_OPTIMA.iter().enumerate() {
        let (cfg, result) = optimize_phases(a, DEFAULT_RESTARTS, k as u64).unwrap();
        let mismatch = phase_mismatch(cfg.phases(), reference);
        ok &= mismatch <= PHASE_MATCH_TOL
            && result.s_value > LHV_BOUND
            && result.s_value <= QUANTUM_BOUND;
        parts.push(format!("a={a}: S={:.5}, Δφ={mismatch:.4}", result.s_value));
    }
    // bound on random settings across the amplitude range
    let mut s_max = f64::NEG_INFINITY;
    for i in 0..4000u64 {
        let u = |k: u64| (derive_seed(i, k) >> 11) as f64 / (1u64 << 53) as f64;
        let cfg = BellConfig {
            a1: 2.74 * u(0),
            a2: 2.74 * u(1),
            b1: 2.74 * u(2),
            b2: 2.74 * u(3),
            alpha1: TAU * u(4),
            alpha2: TAU * u(5),
            beta1: TAU * u(6),
            beta2: TAU * u(7),
            ..BellConfig::equal_amplitudes(1.0, [0.0; 4]).unwrap()
        };
        s_max = s_max.max(s_statistic(&cfg, Evaluation::Analytic).unwrap().s_value);
    }
    ok &= s_max <= QUANTUM_BOUND + 1e-9;
    check(
        ok,
        format!(
            "{}; max S over 4000 random settings {s_max:.4}",
            parts.join("; ")
        ),
    )
}

fn worst_case_curve() -> Outcome {
    let amplitudes = linspace_step(0.3, 2.0, 0.05);
    let mut gaps = Vec::new();
    let mut ok = true;
    for (k, &a) in amplitudes.iter().enumerate() {
        let (cfg, result) = optimize_phases(a, DEFAULT_RESTARTS, k as u64).unwrap();
        let worst = worst_case_s(&cfg).unwrap();
        ok &= worst.s_worst < result.s_value;
        gaps.push((a, result.s_value - worst.s_worst));
    }
    let upper: Vec<f64> = gaps
        .iter()
        .filter(|(a, _)| *a >= 1.0 - 1e-9)
        .map(|&(_, g)| g)
        .collect();
    let grows = upper.windows(2).all(|w| w[1] >= w[0]) && upper.last() > upper.first();
    check(
        ok && grows,
        format!(
            "{} amplitudes, gap {:.4} at a=1.0 rising to {:.4} at a=2.0",
            amplitudes.len(),
            upper.first().unwrap(),
            upper.last().unwrap()
        ),
    )
}

fn significance() -> Outcome {
    let exp = ExperimentSpec::default();
    let (cfg, _) = optimize_phases(1.01, DEFAULT_RESTARTS, 0).unwrap();
    let mut values: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let mode = Evaluation::Simulated {
                experiment: &exp,
                budget: BellBudget::default(),
                seed: derive_seed(9, s),
            };
            s_statistic(&cfg, mode).unwrap().significance.unwrap()
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let median = (values[9] + values[10]) / 2.0;
    check(
        median >= MIN_SIGNIFICANCE,
        format!("median (S − 2)/σ = {median:.2} over {SEEDS} seeds"),
    )
}

fn lhv_bound() -> Outcome {
    let report = lhv_enumeration();
    check(
        report.strategies == 16
            && report.max_ch_excess <= 0.0
            && report.max_normalized_s == LHV_BOUND,
        format!(
            "{} strategies, max CH excess {}, max normalized S {}",
            report.strategies, report.max_ch_excess, report.max_normalized_s
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("identity suite", Duration::from_secs(1), identities),
        ("normalization", Duration::from_secs(5), normalization),
        (
            "oracle equivalence",
            Duration::from_secs(5),
            oracle_equivalence,
        ),
        ("eleven-bin claim", Duration::from_secs(1), eleven_bins),
        ("scan datasets", Duration::from_secs(120), datasets),
        ("visibility", Duration::from_secs(60), visibility_criterion),
        (
            "optimizer regression",
            Duration::from_secs(60),
            optimizer_regression,
        ),
        (
            "worst-case curve",
            Duration::from_secs(120),
            worst_case_curve,
        ),
        ("significance", Duration::from_secs(120), significance),
        ("LHV brute force", Duration::from_secs(1), lhv_bound),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.2?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        failures += usize::from(!pass);
        println!(
            "{} criterion {:>2} {name}: {detail} [{elapsed:.2?}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
