// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sequential change-in-distribution detection with windowed
//! Kolmogorov–Smirnov statistics.
//!
//! The crate is organised around a handful of building blocks:
//!
//! * [`ks`]: single-window statistics on binned counts and raw samples,
//!   plus the Kolmogorov limiting distribution.
//! * [`window`]: the streaming windowed detector `W_t = max_s Δ_{s:t}` and
//!   its stopping rule, for binned counts and raw samples.
//! * [`calibration`]: closed-form and Monte-Carlo thresholds, total
//!   variation distance and the power lower bound.
//! * [`baselines`]: pooled KS, exponential-family Bayes-factor and GLR
//!   detectors used for comparison.
//! * [`simulation`]: synthetic Poisson count streams, mixture densities and
//!   the replicate runner that measures detection delays.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod calibration;
pub mod detector;
pub mod error;
pub mod ks;
pub mod rng;
pub mod simulation;
pub mod window;

pub use baselines::{
    EfGaussianDetector, EfPoissonDetector, GammaPrior, GaussianNull, GaussianStep, GlrGaussianDetector,
    GlrPoissonDetector, PoissonNull, PooledKsDetector, PooledState,
};
pub use calibration::{
    calibrate_monte_carlo, count_crossings, null_statistics, power_lower_bound, threshold_from_bound,
    threshold_from_statistics, tv_distance, CalibratedThreshold, CountsDistribution, FalseAlarmBudget,
    PowerDiagnostics, TailMethod, ThresholdMethod,
};
pub use detector::{AlarmRule, DetectorSpec, Observation, SequentialDetector};
pub use error::{Error, Result};
pub use ks::{
    kolmogorov_cdf, kolmogorov_survival, ks_distance, ks_distance_raw, CountVector, RawSampleBatch, SpectrumCdf,
};
pub use simulation::{
    anomaly_weight, average_detection_delay, gaussian_mixture_density, mix_densities, run_replicates, run_scenario,
    sample_counts, sample_poisson, source_rate, CensoringPolicy, ChangepointPlan, CountModel, DelayRecord,
    DelaySummary, Density, GaussianMixture, MixtureComponent, SampleMode, Scenario, SourceSpec, StreamGenerator,
};
pub use window::{DetectorConfig, KsDetector, PostAlarm, RawKsDetector, StepOutcome, WindowState};
