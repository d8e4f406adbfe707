// SPDX-License-Identifier: MIT OR Apache-2.0

//! Calibration and benchmark drivers behind the `calibrate` and `benchmark`
//! subcommands.

use std::collections::HashMap;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use ksdetect::{
    average_detection_delay, calibrate_monte_carlo, run_replicates, threshold_from_bound, AlarmRule,
    CalibratedThreshold, CensoringPolicy, DetectorSpec, FalseAlarmBudget, Scenario, ThresholdMethod,
};

use crate::config::{CalibrationMethod, ExperimentConfig};
use crate::results::{ResultRow, ResultsTable};
use crate::{CliError, ConfigError};

/// Machine-readable outcome of `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub method: CalibrationMethod,
    pub horizon: u64,
    pub target: f64,
    pub reps: Option<u64>,
    pub thresholds: Vec<ThresholdEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub detector: String,
    pub threshold: f64,
    pub method: ThresholdMethod,
    pub rule: AlarmRule,
    /// Bound-based thresholds over-protect against false alarms.
    pub conservative: bool,
}

impl From<CalibratedThreshold> for ThresholdEntry {
    fn from(c: CalibratedThreshold) -> Self {
        Self {
            conservative: c.method == ThresholdMethod::Bound,
            detector: c.detector,
            threshold: c.threshold,
            method: c.method,
            rule: c.rule,
        }
    }
}

impl CalibrationReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let (Some(s), Some(seed)) = (&self.scenario, self.seed) {
            out.push_str(&format!("scenario {s}, seed {seed}\n"));
        }
        out.push_str(&format!("horizon T={}, target {} false alarm(s) per horizon", self.horizon, self.target));
        if let Some(r) = self.reps {
            out.push_str(&format!(", {r} null replicates"));
        }
        out.push('\n');
        let w = self.thresholds.iter().map(|t| t.detector.len()).max().unwrap_or(0);
        for t in &self.thresholds {
            let how = match t.method {
                ThresholdMethod::Bound => "bound (conservative)",
                ThresholdMethod::MonteCarlo => "monte-carlo",
            };
            out.push_str(&format!("{:<w$}  c = {:.6}  {how}\n", t.detector, t.threshold));
        }
        out
    }
}

/// Closed-form threshold for a windowed KS rule.
pub fn bound_report(horizon: u64, window: usize, alpha: f64) -> Result<CalibrationReport, ConfigError> {
    let budget = FalseAlarmBudget::new(horizon, window, alpha).map_err(|e| ConfigError::new(e.to_string()))?;
    let c = threshold_from_bound(&budget);
    Ok(CalibrationReport {
        scenario: None,
        seed: None,
        method: CalibrationMethod::Bound,
        horizon,
        target: alpha,
        reps: None,
        thresholds: vec![ThresholdEntry {
            detector: DetectorSpec::KsBound { window, buckets: None }.id(),
            threshold: c,
            method: ThresholdMethod::Bound,
            rule: AlarmRule::AtLeast,
            conservative: true,
        }],
    })
}

/// Thresholds for every configured detector.
pub fn calibrate(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<CalibratedThreshold>, CliError> {
    let cal = &cfg.calibration;
    match cal.method {
        CalibrationMethod::Bound => cfg
            .detectors
            .iter()
            .map(|d| {
                let window = match d {
                    DetectorSpec::Ks { window, .. } | DetectorSpec::KsBound { window, .. } => *window,
                    other => {
                        return Err(CliError::Config(ConfigError::field(
                            "calibration.method",
                            &format!("the bound applies to KS rules only, not {}", other.id()),
                        )))
                    }
                };
                let budget = FalseAlarmBudget::new(cal.horizon, window, cal.target)
                    .map_err(|e| ConfigError::field("calibration", &e.to_string()))?;
                Ok(CalibratedThreshold {
                    detector: d.id(),
                    threshold: threshold_from_bound(&budget),
                    method: ThresholdMethod::Bound,
                    rule: AlarmRule::AtLeast,
                })
            })
            .collect(),
        CalibrationMethod::MonteCarlo => {
            if cal.reps == 1 {
                log::warn!("monte-carlo calibration with reps=1: thresholds will have high variance");
            }
            for (i, d) in cfg.detectors.iter().enumerate() {
                d.check_compatible(scenario)
                    .map_err(|e| ConfigError::field(&format!("detectors[{i}]"), &e.to_string()))?;
            }
            let out = calibrate_monte_carlo(
                scenario,
                &cfg.detectors,
                cal.horizon,
                cal.target,
                cal.reps,
                cfg.calibration_seed(),
            )
            .context("monte-carlo calibration failed")?;
            Ok(out)
        }
    }
}

pub fn calibration_report(cfg: &ExperimentConfig) -> Result<CalibrationReport, CliError> {
    let scenario = cfg.scenario.build()?;
    let thresholds = calibrate(cfg, &scenario)?;
    Ok(CalibrationReport {
        scenario: Some(cfg.scenario.id.clone()),
        seed: Some(cfg.calibration_seed()),
        method: cfg.calibration.method,
        horizon: cfg.calibration.horizon,
        target: cfg.calibration.target,
        reps: (cfg.calibration.method == CalibrationMethod::MonteCarlo).then_some(cfg.calibration.reps),
        thresholds: thresholds.into_iter().map(ThresholdEntry::from).collect(),
    })
}

/// Calibrates, runs every replicate and aggregates delays per detector.
pub fn benchmark(cfg: &ExperimentConfig) -> Result<ResultsTable, CliError> {
    let scenario = cfg.scenario.build()?;
    log::info!("calibrating {} detector(s)", cfg.detectors.len());
    let thresholds = calibrate(cfg, &scenario)?;
    let pairs: Vec<(DetectorSpec, f64)> =
        cfg.detectors.iter().cloned().zip(thresholds.iter().map(|t| t.threshold)).collect();
    log::info!("running {} replicate(s)", cfg.replicates);
    let records = run_replicates(&scenario, &pairs, cfg.scenario.changepoint, cfg.replicates, cfg.seed)
        .with_context(|| format!("benchmark failed (seed {})", cfg.seed))?;
    let mut by_detector: HashMap<&str, Vec<_>> = HashMap::new();
    for r in &records {
        by_detector.entry(r.detector.as_str()).or_default().push(r.clone());
    }
    let policy = CensoringPolicy::default();
    let mut rows = Vec::with_capacity(pairs.len());
    for t in &thresholds {
        let recs = by_detector.get(t.detector.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let s = average_detection_delay(recs, policy).context("summarising delays")?;
        rows.push(ResultRow {
            scenario: cfg.scenario.id.clone(),
            detector: t.detector.clone(),
            mean_delay: s.mean_delay,
            detection_fraction: s.detection_fraction,
            false_alarms: s.mean_false_alarms,
            threshold: t.threshold,
            threshold_method: match t.method {
                ThresholdMethod::Bound => "bound".into(),
                ThresholdMethod::MonteCarlo => "monte-carlo".into(),
            },
            censored: s.censored as u64,
            censoring: policy.to_string(),
            reps: cfg.replicates,
            seed: cfg.seed,
        });
    }
    Ok(ResultsTable { rows })
}
