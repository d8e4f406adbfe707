// SPDX-License-Identifier: MIT OR Apache-2.0

//! Alarm thresholds and power diagnostics.
//!
//! Thresholds come either from the union bound on false alarms over a horizon
//! `T`, `E(A_T) ≤ 2·T·L·exp(−2c²)`, or from simulated null streams. The power
//! side gives a lower bound on the chance that a window started after the
//! change crosses the threshold.

use serde::{Deserialize, Serialize};

use crate::detector::{AlarmRule, DetectorSpec};
use crate::error::{Error, Result};
use crate::ks::SpectrumCdf;
use crate::rng::{domain, map_replicates, substream};
use crate::simulation::Scenario;
use crate::window::PostAlarm;

/// Horizon, window and tolerated expected number of false alarms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalseAlarmBudget {
    pub horizon: u64,
    pub window: usize,
    pub alpha: f64,
}

impl FalseAlarmBudget {
    pub fn new(horizon: u64, window: usize, alpha: f64) -> Result<Self> {
        if window == 0 || (window as u64) > horizon {
            return Err(Error::config(format!("need 1 <= window <= horizon, got window {window}, horizon {horizon}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { horizon, window, alpha })
    }
}

/// Smallest `c ≥ 0` with `2·T·L·exp(−2c²) ≤ alpha`.
pub fn threshold_from_bound(budget: &FalseAlarmBudget) -> f64 {
    let ratio = 2.0 * budget.horizon as f64 * budget.window as f64 / budget.alpha;
    (ratio.ln().max(0.0) / 2.0).sqrt()
}

/// Smallest threshold such that the pooled statistics of `reps` null streams
/// cross it at most `target` times per stream on average.
///
/// Statistics that can never alarm (skipped steps) should be passed as
/// `-inf`. Returns 0 when every threshold meets the target.
pub fn threshold_from_statistics(stats: &[f64], reps: u64, target: f64, rule: AlarmRule) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::domain(format!("false-alarm target must be positive, got {target}")));
    }
    if reps == 0 {
        return Err(Error::domain("at least one replicate is needed"));
    }
    let allowed = (target * reps as f64).floor();
    if allowed >= stats.len() as f64 {
        return Ok(0.0);
    }
    let allowed = allowed as usize;
    let mut sorted = stats.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let v = sorted[allowed];
    if v.is_nan() {
        return Err(Error::domain("null statistics contain NaN"));
    }
    Ok(match rule {
        // Every value ≥ v would cross `v` itself; step just above it.
        AlarmRule::AtLeast => v.next_up(),
        AlarmRule::Above => v,
    })
}

/// Number of pooled statistics crossing `threshold` under `rule`.
pub fn count_crossings(stats: &[f64], threshold: f64, rule: AlarmRule) -> usize {
    stats.iter().filter(|&&s| rule.fires(s, threshold)).count()
}

/// Where a threshold came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMethod {
    /// Closed-form false-alarm bound; conservative.
    Bound,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub detector: String,
    pub threshold: f64,
    pub method: ThresholdMethod,
    pub rule: AlarmRule,
}

/// Per-step statistics of every detector on `reps` null streams of length
/// `horizon` drawn from the scenario's pre-change density. Each detector
/// sees the same streams; skipped steps are reported as `-inf`.
pub fn null_statistics(
    scenario: &Scenario,
    detectors: &[DetectorSpec],
    horizon: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let null = scenario.without_change().with_horizon(horizon)?;
    for spec in detectors {
        spec.check_compatible(&null)?;
    }
    let runs = map_replicates(reps, |r| -> Result<Vec<Vec<f64>>> {
        let mut rng = substream(seed, domain::CALIBRATION, r);
        let gen = null.generator()?;
        let mut dets =
            detectors.iter().map(|d| d.build(&null, f64::MAX, PostAlarm::Continue)).collect::<Result<Vec<_>>>()?;
        let mut stats = vec![Vec::with_capacity(horizon as usize); dets.len()];
        for t in 1..=horizon {
            let obs = gen.observation(t, &mut rng);
            for (det, out) in dets.iter_mut().zip(stats.iter_mut()) {
                let o = det.step(&obs)?;
                out.push(if o.skipped { f64::NEG_INFINITY } else { o.w_stat });
            }
        }
        Ok(stats)
    });
    let mut pooled = vec![Vec::with_capacity((reps * horizon) as usize); detectors.len()];
    for (r, run) in runs.into_iter().enumerate() {
        let run = run.map_err(|e| Error::Replicate { replicate: r as u64, seed, source: Box::new(e) })?;
        for (acc, s) in pooled.iter_mut().zip(run) {
            acc.extend(s);
        }
    }
    Ok(pooled)
}

/// Thresholds for each detector: bound-based detectors get
/// [`threshold_from_bound`] with `alpha = target`; the rest are calibrated on
/// `reps` simulated null streams so that the mean number of crossings per
/// stream of length `horizon` is at most `target`. All crossings count, as
/// in continue-after-alarm mode.
pub fn calibrate_monte_carlo(
    scenario: &Scenario,
    detectors: &[DetectorSpec],
    horizon: u64,
    target: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<CalibratedThreshold>> {
    if !(target > 0.0) {
        return Err(Error::domain(format!("false-alarm target must be positive, got {target}")));
    }
    if reps == 0 {
        return Err(Error::domain("at least one replicate is needed"));
    }
    if reps == 1 {
        log::warn!("calibrating on a single replicate; thresholds will be noisy");
    }
    let simulated: Vec<DetectorSpec> = detectors.iter().filter(|d| !d.uses_bound()).cloned().collect();
    let stats =
        if simulated.is_empty() { Vec::new() } else { null_statistics(scenario, &simulated, horizon, reps, seed)? };
    let mut stats = stats.into_iter();
    detectors
        .iter()
        .map(|spec| {
            let rule = spec.alarm_rule();
            let (threshold, method) = if spec.uses_bound() {
                let window = spec.window().expect("bound detectors are windowed");
                let budget = FalseAlarmBudget::new(horizon, window, target)?;
                (threshold_from_bound(&budget), ThresholdMethod::Bound)
            } else {
                let pooled = stats.next().expect("one statistic set per simulated detector");
                (threshold_from_statistics(&pooled, reps, target, rule)?, ThresholdMethod::MonteCarlo)
            };
            Ok(CalibratedThreshold { detector: spec.id(), threshold, method, rule })
        })
        .collect()
}

/// `max_j |F⁰(ξ_j) − F_c(ξ_j)|`, the discrete total-variation analogue.
pub fn tv_distance(cdf0: &SpectrumCdf, cdfc: &SpectrumCdf) -> Result<f64> {
    if cdf0.bin_count() != cdfc.bin_count() {
        return Err(Error::DimensionMismatch { expected: cdf0.bin_count(), found: cdfc.bin_count() });
    }
    Ok(cdf0.values().iter().zip(cdfc.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Law of the total count `Σ N_k` in a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CountsDistribution {
    Fixed { total: u64 },
    Poisson { mean: f64 },
}

impl CountsDistribution {
    /// Total of `steps` independent `Poisson(rate)` counts.
    pub fn poisson_window(rate: f64, steps: u64) -> Self {
        CountsDistribution::Poisson { mean: rate * steps as f64 }
    }
}

/// How `P(√ΣN < 2c/d)` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    Deterministic,
    Exact,
    /// Normal approximation with continuity correction.
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDiagnostics {
    pub tv: f64,
    pub threshold: f64,
    /// `(2c/d)²`, the total count needed for the bound to bite.
    pub required_counts: f64,
    /// `1 − 2·exp(−2c²)`.
    pub prob_bound: f64,
    /// `P(ΣN < (2c/d)²)`.
    pub tail_probability: f64,
    pub tail_method: TailMethod,
    /// `prob_bound − tail_probability`; may be negative (vacuous).
    pub power_bound: f64,
    /// `power_bound` clamped to `[0, 1]`.
    pub power_bound_clamped: f64,
}

const EXACT_TAIL_LIMIT: u64 = 1_000_000;

fn poisson_cdf_exact(k: u64, mean: f64) -> f64 {
    let ln_mean = mean.ln();
    let mut acc = 0.0;
    for i in 0..=k {
        let x = i as f64;
        acc += (x * ln_mean - mean - libm::lgamma(x + 1.0)).exp();
    }
    acc.min(1.0)
}

fn poisson_cdf_normal(k: u64, mean: f64) -> f64 {
    let z = (k as f64 + 0.5 - mean) / mean.sqrt();
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Lower bound on the probability that a post-change window with total
/// count `ΣN` crosses `threshold`, given `d(F_c, F⁰) = tv`:
/// `1 − 2exp(−2c²) − P(√ΣN < 2c/d)`.
pub fn power_lower_bound(threshold: f64, tv: f64, counts: CountsDistribution) -> Result<PowerDiagnostics> {
    if !(tv > 0.0) {
        return Err(Error::UndefinedPower);
    }
    if !(threshold > 0.0) || tv > 1.0 {
        return Err(Error::domain("need threshold > 0 and 0 < tv <= 1"));
    }
    let required = (2.0 * threshold / tv).powi(2);
    // Largest integer strictly below `required`.
    let below = required.ceil() - 1.0;
    let (tail, method) = match counts {
        CountsDistribution::Fixed { total } => {
            (if (total as f64) < required { 1.0 } else { 0.0 }, TailMethod::Deterministic)
        }
        CountsDistribution::Poisson { mean } => {
            if !(mean > 0.0) {
                return Err(Error::domain("mean window count must be positive"));
            }
            if below < 0.0 {
                (0.0, TailMethod::Exact)
            } else if below <= EXACT_TAIL_LIMIT as f64 {
                (poisson_cdf_exact(below as u64, mean), TailMethod::Exact)
            } else {
                (poisson_cdf_normal(below as u64, mean), TailMethod::NormalApprox)
            }
        }
    };
    let prob_bound = 1.0 - 2.0 * (-2.0 * threshold * threshold).exp();
    let power = prob_bound - tail;
    Ok(PowerDiagnostics {
        tv,
        threshold,
        required_counts: required,
        prob_bound,
        tail_probability: tail,
        tail_method: method,
        power_bound: power,
        power_bound_clamped: power.clamp(0.0, 1.0),
    })
}
