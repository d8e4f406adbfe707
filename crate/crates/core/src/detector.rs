// SPDX-License-Identifier: MIT OR Apache-2.0

//! Common detector interface and the declarative detector catalogue used by
//! calibration and the replicate runner.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    EfGaussianDetector, EfPoissonDetector, GammaPrior, GaussianNull, GlrGaussianDetector, GlrPoissonDetector,
    PoissonNull, PooledKsDetector,
};
use crate::error::{Error, Result};
use crate::ks::{CountVector, RawSampleBatch};
use crate::simulation::{SampleMode, Scenario};
use crate::window::{DetectorConfig, KsDetector, PostAlarm, RawKsDetector, StepOutcome};

/// One time step of data as delivered to a detector.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Counts(CountVector),
    Samples(RawSampleBatch),
}

/// How a statistic is compared against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlarmRule {
    /// Alarm when `stat >= c`.
    AtLeast,
    /// Alarm when `stat > c`.
    Above,
}

impl AlarmRule {
    pub fn fires(self, stat: f64, threshold: f64) -> bool {
        match self {
            AlarmRule::AtLeast => stat >= threshold,
            AlarmRule::Above => stat > threshold,
        }
    }
}

/// A single-stream stateful stopping rule.
///
/// Instances are not meant to be shared between threads while stepping, but
/// they can be moved across threads.
pub trait SequentialDetector: Send {
    /// Consumes the next time step and reports the statistic and alarm flag.
    fn step(&mut self, obs: &Observation) -> Result<StepOutcome>;

    fn threshold(&self) -> f64;

    fn alarm_rule(&self) -> AlarmRule;

    /// Forgets all data, returning to `t = 0`.
    fn reset(&mut self);
}

/// Threshold comparison plus halt-on-alarm bookkeeping shared by detectors.
#[derive(Debug, Clone)]
pub(crate) struct AlarmGate {
    threshold: f64,
    rule: AlarmRule,
    post_alarm: PostAlarm,
    halted_at: Option<u64>,
}

impl AlarmGate {
    pub(crate) fn new(threshold: f64, rule: AlarmRule, post_alarm: PostAlarm) -> Self {
        Self { threshold, rule, post_alarm, halted_at: None }
    }

    pub(crate) fn ensure_open(&self) -> Result<()> {
        match self.halted_at {
            Some(t) => Err(Error::Halted(t)),
            None => Ok(()),
        }
    }

    pub(crate) fn decide(&mut self, t: u64, stat: f64, skipped: bool) -> bool {
        let alarm = !skipped && self.rule.fires(stat, self.threshold);
        if alarm && self.post_alarm == PostAlarm::Halt {
            self.halted_at = Some(t);
        }
        alarm
    }

    pub(crate) fn threshold(&self) -> f64 {
        self.threshold
    }

    pub(crate) fn rule(&self) -> AlarmRule {
        self.rule
    }

    pub(crate) fn reset(&mut self) {
        self.halted_at = None;
    }
}

fn default_prior() -> f64 {
    1.0
}

/// Declarative description of a detector, resolved against a [`Scenario`]
/// (which supplies the known pre-change distribution) by [`DetectorSpec::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DetectorSpec {
    /// Windowed KS with a Monte-Carlo calibrated threshold.
    Ks {
        window: usize,
        /// Bucket count for the raw-sample evaluator.
        #[serde(default)]
        buckets: Option<usize>,
    },
    /// Windowed KS with the conservative closed-form threshold.
    KsBound {
        window: usize,
        #[serde(default)]
        buckets: Option<usize>,
    },
    /// Pooled KS over all data since the first step.
    PooledKs,
    /// Bayes-factor rule with independent gamma priors on channel rates.
    EfPoisson {
        window: usize,
        #[serde(default = "default_prior")]
        prior_shape: f64,
        #[serde(default = "default_prior")]
        prior_scale: f64,
    },
    GlrPoisson {
        window: usize,
    },
    /// Bayes-factor rule on per-step means with a `N(0, τ²)` prior on the shift.
    EfGaussian {
        window: usize,
        tau: f64,
    },
    GlrGaussian {
        window: usize,
        #[serde(default)]
        estimate_sd: bool,
    },
}

impl DetectorSpec {
    /// Short identifier used in tables.
    pub fn id(&self) -> String {
        match self {
            DetectorSpec::Ks { window, .. } => format!("KS(L={window})"),
            DetectorSpec::KsBound { window, .. } => format!("KS*(L={window})"),
            DetectorSpec::PooledKs => "PKS".to_string(),
            DetectorSpec::EfPoisson { window, .. } => format!("EF(L={window})"),
            DetectorSpec::GlrPoisson { window } => format!("GLR(L={window})"),
            DetectorSpec::EfGaussian { window, tau } => format!("EF(L={window},tau={tau})"),
            DetectorSpec::GlrGaussian { window, estimate_sd } => {
                if *estimate_sd {
                    format!("GLR-sd(L={window})")
                } else {
                    format!("GLR(L={window})")
                }
            }
        }
    }

    pub fn window(&self) -> Option<usize> {
        match self {
            DetectorSpec::Ks { window, .. }
            | DetectorSpec::KsBound { window, .. }
            | DetectorSpec::EfPoisson { window, .. }
            | DetectorSpec::GlrPoisson { window }
            | DetectorSpec::EfGaussian { window, .. }
            | DetectorSpec::GlrGaussian { window, .. } => Some(*window),
            DetectorSpec::PooledKs => None,
        }
    }

    /// Whether the threshold comes from the false-alarm bound rather than
    /// from simulation.
    pub fn uses_bound(&self) -> bool {
        matches!(self, DetectorSpec::KsBound { .. })
    }

    pub fn alarm_rule(&self) -> AlarmRule {
        match self {
            DetectorSpec::PooledKs => AlarmRule::Above,
            _ => AlarmRule::AtLeast,
        }
    }

    /// Checks that the detector can run on the scenario's data.
    pub fn check_compatible(&self, scenario: &Scenario) -> Result<()> {
        let binned = scenario.mode == SampleMode::Binned;
        match self {
            DetectorSpec::Ks { .. } | DetectorSpec::KsBound { .. } => Ok(()),
            DetectorSpec::PooledKs | DetectorSpec::EfPoisson { .. } | DetectorSpec::GlrPoisson { .. } => {
                if binned {
                    Ok(())
                } else {
                    Err(Error::config(format!("{} needs a binned scenario", self.id())))
                }
            }
            DetectorSpec::EfGaussian { .. } | DetectorSpec::GlrGaussian { .. } => {
                if binned {
                    Err(Error::config(format!("{} needs a raw-sample scenario", self.id())))
                } else {
                    scenario.gaussian_null().map(|_| ())
                }
            }
        }
    }

    /// Instantiates the detector for `scenario` with the given threshold.
    pub fn build(
        &self,
        scenario: &Scenario,
        threshold: f64,
        post_alarm: PostAlarm,
    ) -> Result<Box<dyn SequentialDetector>> {
        self.check_compatible(scenario)?;
        let cfg = |window: usize| DetectorConfig { window, threshold, post_alarm };
        Ok(match self {
            DetectorSpec::Ks { window, buckets } | DetectorSpec::KsBound { window, buckets } => match scenario.mode {
                SampleMode::Binned => Box::new(KsDetector::new(scenario.pre.cdf()?, cfg(*window))?),
                SampleMode::Raw => {
                    let mixture = scenario
                        .pre
                        .analytic()
                        .cloned()
                        .ok_or_else(|| Error::config("raw-sample KS needs an analytic pre-change density"))?;
                    let mut det = RawKsDetector::new(move |y| mixture.cdf(y), cfg(*window))?;
                    if let Some(b) = buckets {
                        det = det.with_buckets(*b)?;
                    }
                    Box::new(det)
                }
            },
            DetectorSpec::PooledKs => Box::new(PooledKsDetector::new(scenario.pre.cdf()?, threshold, post_alarm)?),
            DetectorSpec::EfPoisson { window, prior_shape, prior_scale } => {
                let null = PoissonNull::from_density(&scenario.pre, scenario.rate)?;
                let prior = GammaPrior::new(*prior_shape, *prior_scale)?;
                Box::new(EfPoissonDetector::new(null, prior, cfg(*window))?)
            }
            DetectorSpec::GlrPoisson { window } => {
                let null = PoissonNull::from_density(&scenario.pre, scenario.rate)?;
                Box::new(GlrPoissonDetector::new(null, cfg(*window))?)
            }
            DetectorSpec::EfGaussian { window, tau } => {
                let (mean, sigma) = scenario.gaussian_null()?;
                let null = GaussianNull::new(mean, sigma, *tau)?;
                Box::new(EfGaussianDetector::new(null, cfg(*window))?)
            }
            DetectorSpec::GlrGaussian { window, estimate_sd } => {
                let (mean, sigma) = scenario.gaussian_null()?;
                let null = GaussianNull::new(mean, sigma, 1.0)?;
                Box::new(GlrGaussianDetector::new(null, cfg(*window))?.estimate_sd(*estimate_sd))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alarm_rules() {
        assert!(AlarmRule::AtLeast.fires(1.0, 1.0));
        assert!(!AlarmRule::Above.fires(1.0, 1.0));
        assert!(AlarmRule::Above.fires(1.5, 1.0));
    }

    #[test]
    fn halt_gate_blocks_after_alarm() {
        let mut gate = AlarmGate::new(1.0, AlarmRule::AtLeast, PostAlarm::Halt);
        assert!(!gate.decide(1, 0.5, false));
        gate.ensure_open().unwrap();
        assert!(gate.decide(2, 1.0, false));
        assert_eq!(gate.ensure_open(), Err(Error::Halted(2)));
        gate.reset();
        gate.ensure_open().unwrap();
    }

    #[test]
    fn skipped_steps_never_alarm() {
        let mut gate = AlarmGate::new(0.5, AlarmRule::AtLeast, PostAlarm::Continue);
        assert!(!gate.decide(1, 10.0, true));
    }

    #[test]
    fn spec_parses_from_tagged_form() {
        let spec: DetectorSpec = serde_json::from_str(r#"{"kind":"ef-poisson","window":50}"#).unwrap();
        assert_eq!(spec, DetectorSpec::EfPoisson { window: 50, prior_shape: 1.0, prior_scale: 1.0 });
        assert_eq!(spec.id(), "EF(L=50)");
        assert_eq!(DetectorSpec::PooledKs.alarm_rule(), AlarmRule::Above);
    }
}
