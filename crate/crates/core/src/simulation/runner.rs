// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replicate runner: streams one scenario through several detectors on
//! identical data and records detection delays.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::DetectorSpec;
use crate::error::{Error, Result};
use crate::rng::{domain, map_replicates, substream, StreamRng};
use crate::simulation::Scenario;
use crate::window::PostAlarm;

/// How each replicate picks its changepoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChangepointPlan {
    /// Use the scenario's own changepoint.
    #[default]
    Scenario,
    Fixed {
        at: u64,
    },
    /// Uniform on `min..=max`.
    Uniform {
        min: u64,
        max: u64,
    },
}

impl ChangepointPlan {
    fn draw(self, scenario: &Scenario, rng: &mut StreamRng) -> Option<u64> {
        match self {
            ChangepointPlan::Scenario => scenario.changepoint,
            ChangepointPlan::Fixed { at } => Some(at),
            ChangepointPlan::Uniform { min, max } => Some(rng.random_range(min..=max)),
        }
    }

    pub fn validate(self, horizon: u64) -> Result<()> {
        let last = match self {
            ChangepointPlan::Scenario => return Ok(()),
            ChangepointPlan::Fixed { at } => at,
            ChangepointPlan::Uniform { min, max } => {
                if min > max {
                    return Err(Error::config(format!("changepoint range {min}..={max} is empty")));
                }
                max
            }
        };
        if last >= horizon {
            return Err(Error::config(format!("changepoint {last} must precede horizon {horizon}")));
        }
        Ok(())
    }
}

/// How runs without a detection enter the mean delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensoringPolicy {
    /// Count the run at the largest observable delay, `horizon − v`.
    #[default]
    HorizonMinusChangepoint,
}

impl std::fmt::Display for CensoringPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CensoringPolicy::HorizonMinusChangepoint => f.write_str("horizon-minus-changepoint"),
        }
    }
}

/// Outcome of one detector on one replicate stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayRecord {
    pub detector: String,
    pub replicate: u64,
    pub changepoint: Option<u64>,
    /// First alarm strictly after the changepoint.
    pub alarm_time: Option<u64>,
    /// `alarm_time − v`, or `horizon − v` when censored.
    pub delay: u64,
    pub censored: bool,
    /// Alarms at `t ≤ v` (every crossing counts).
    pub false_alarms: u64,
}

/// Runs one stream of `scenario` (changepoint as declared) through every
/// detector, each paired with its threshold.
pub fn run_scenario(scenario: &Scenario, detectors: &[(DetectorSpec, f64)], seed: u64) -> Result<Vec<DelayRecord>> {
    let mut rng = substream(seed, domain::SCENARIO, 0);
    run_stream(scenario, scenario.changepoint, detectors, 0, &mut rng)
}

/// Runs `reps` independent streams, replicate `r` drawing its changepoint and
/// data from its own substream. Records are ordered by replicate, then by
/// detector.
pub fn run_replicates(
    scenario: &Scenario,
    detectors: &[(DetectorSpec, f64)],
    plan: ChangepointPlan,
    reps: u64,
    seed: u64,
) -> Result<Vec<DelayRecord>> {
    plan.validate(scenario.horizon)?;
    for (spec, _) in detectors {
        spec.check_compatible(scenario)?;
    }
    let runs = map_replicates(reps, |r| {
        let mut rng = substream(seed, domain::BENCHMARK, r);
        let v = plan.draw(scenario, &mut rng);
        run_stream(scenario, v, detectors, r, &mut rng).map_err(|e| Error::Replicate {
            replicate: r,
            seed,
            source: Box::new(e),
        })
    });
    let mut out = Vec::with_capacity(reps as usize * detectors.len());
    for run in runs {
        out.extend(run?);
    }
    Ok(out)
}

fn run_stream(
    scenario: &Scenario,
    changepoint: Option<u64>,
    detectors: &[(DetectorSpec, f64)],
    replicate: u64,
    rng: &mut StreamRng,
) -> Result<Vec<DelayRecord>> {
    let mut gen = scenario.generator()?;
    gen.set_changepoint(changepoint);
    let mut live =
        detectors.iter().map(|(spec, c)| spec.build(scenario, *c, PostAlarm::Continue)).collect::<Result<Vec<_>>>()?;
    let v = changepoint.unwrap_or(scenario.horizon);
    let mut false_alarms = vec![0u64; detectors.len()];
    let mut detected: Vec<Option<u64>> = vec![None; detectors.len()];
    for t in 1..=scenario.horizon {
        if t > v && detected.iter().all(Option::is_some) {
            break;
        }
        let obs = gen.observation(t, rng);
        for (i, det) in live.iter_mut().enumerate() {
            if detected[i].is_some() {
                continue;
            }
            let outcome = det.step(&obs)?;
            if outcome.alarm {
                if t <= v {
                    false_alarms[i] += 1;
                } else {
                    detected[i] = Some(t);
                }
            }
        }
    }
    Ok(detectors
        .iter()
        .enumerate()
        .map(|(i, (spec, _))| DelayRecord {
            detector: spec.id(),
            replicate,
            changepoint,
            alarm_time: detected[i],
            delay: detected[i].map_or(scenario.horizon - v, |tau| tau - v),
            censored: detected[i].is_none(),
            false_alarms: false_alarms[i],
        })
        .collect())
}

/// Aggregate of one detector's records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    pub detector: String,
    pub replicates: usize,
    pub mean_delay: f64,
    /// Fraction of runs with an alarm after the changepoint.
    pub detection_fraction: f64,
    pub censored: usize,
    /// Mean number of pre-change alarms per run.
    pub mean_false_alarms: f64,
    pub policy: CensoringPolicy,
}

/// Mean delay over `records` under the declared censoring policy.
pub fn average_detection_delay(records: &[DelayRecord], policy: CensoringPolicy) -> Result<DelaySummary> {
    let first = records.first().ok_or_else(|| Error::domain("no delay records to summarise"))?;
    let n = records.len();
    let delay_sum: u64 = match policy {
        CensoringPolicy::HorizonMinusChangepoint => records.iter().map(|r| r.delay).sum(),
    };
    let censored = records.iter().filter(|r| r.censored).count();
    let fa: u64 = records.iter().map(|r| r.false_alarms).sum();
    Ok(DelaySummary {
        detector: first.detector.clone(),
        replicates: n,
        mean_delay: delay_sum as f64 / n as f64,
        detection_fraction: (n - censored) as f64 / n as f64,
        censored,
        mean_false_alarms: fa as f64 / n as f64,
        policy,
    })
}
