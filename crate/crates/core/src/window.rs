// SPDX-License-Identifier: MIT OR Apache-2.0

//! The windowed KS stopping rule.
//!
//! At time `t` the detector evaluates `Δ_{s:t}` for every window start `s`
//! among the last `L` steps and reports `W_t = max_s Δ_{s:t}`. Per-bin integer
//! sums over the ring buffer make each step cost `O(L·D)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::detector::{AlarmGate, AlarmRule, Observation, SequentialDetector};
use crate::error::{Error, Result};
use crate::ks::{max_cdf_gap, order_statistic_gap, CountVector, RawSampleBatch, SpectrumCdf};

/// What a detector does after its first alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostAlarm {
    /// Keep consuming data and flag every crossing; the buffer is not reset.
    #[default]
    Continue,
    /// Stop at the first alarm; further steps return [`Error::Halted`].
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Number of most recent steps a window may reach back over (`L`).
    pub window: usize,
    /// Alarm threshold `c_L`.
    pub threshold: f64,
    #[serde(default)]
    pub post_alarm: PostAlarm,
}

impl DetectorConfig {
    pub fn new(window: usize, threshold: f64) -> Self {
        Self { window, threshold, post_alarm: PostAlarm::Continue }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("window size must be at least 1"));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::config(format!("threshold must be positive, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Result of feeding one time step to a detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// 1-based time index of the step just consumed.
    pub t: u64,
    /// Detector statistic (`W_t` for the windowed KS rule).
    pub w_stat: f64,
    pub alarm: bool,
    /// Window start `s` attaining the maximum.
    pub argmax_start: Option<u64>,
    /// 1-based channel attaining the inner maximum, for binned KS statistics.
    pub argmax_bin: Option<usize>,
    /// No window held any data, so no statistic was formed.
    pub skipped: bool,
}

impl StepOutcome {
    pub(crate) fn skipped(t: u64) -> Self {
        Self { t, w_stat: 0.0, alarm: false, argmax_start: None, argmax_bin: None, skipped: true }
    }
}

/// Ring buffer of the last `L` count vectors plus their per-bin sums.
#[derive(Debug, Clone)]
pub struct WindowState {
    bins: usize,
    capacity: usize,
    ring: VecDeque<CountVector>,
    window_counts: Vec<u64>,
    window_total: u64,
    t: u64,
}

impl WindowState {
    pub fn new(bins: usize, capacity: usize) -> Result<Self> {
        if bins == 0 || capacity == 0 {
            return Err(Error::config("window state needs at least one bin and one slot"));
        }
        Ok(Self {
            bins,
            capacity,
            ring: VecDeque::with_capacity(capacity),
            window_counts: vec![0; bins],
            window_total: 0,
            t: 0,
        })
    }

    /// Appends `x` as time `t + 1`, evicting the oldest vector once the ring
    /// holds `L` of them.
    pub fn push(&mut self, x: CountVector) -> Result<()> {
        if x.bin_count() != self.bins {
            return Err(Error::DimensionMismatch { expected: self.bins, found: x.bin_count() });
        }
        if self.ring.len() == self.capacity {
            let old = self.ring.pop_front().expect("capacity >= 1");
            for (acc, c) in self.window_counts.iter_mut().zip(old.counts()) {
                *acc -= c;
            }
            self.window_total -= old.total();
        }
        for (acc, c) in self.window_counts.iter_mut().zip(x.counts()) {
            *acc += c;
        }
        self.window_total += x.total();
        self.ring.push_back(x);
        self.t += 1;
        Ok(())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Time index of the oldest buffered step.
    pub fn oldest_start(&self) -> u64 {
        self.t + 1 - self.ring.len() as u64
    }

    pub fn ring(&self) -> impl ExactSizeIterator<Item = &CountVector> {
        self.ring.iter()
    }

    pub fn window_counts(&self) -> &[u64] {
        &self.window_counts
    }

    pub fn window_total(&self) -> u64 {
        self.window_total
    }

    /// Per-bin sums recomputed from the ring by direct summation.
    pub fn recount(&self) -> (Vec<u64>, u64) {
        let mut counts = vec![0u64; self.bins];
        for x in &self.ring {
            for (acc, c) in counts.iter_mut().zip(x.counts()) {
                *acc += c;
            }
        }
        let total = counts.iter().sum();
        (counts, total)
    }

    /// Visits every window `s..=t`, oldest start first, with the aggregated
    /// per-bin counts and their total.
    pub fn sweep(&self, scratch: &mut Vec<u64>, mut visit: impl FnMut(u64, &[u64], u64)) {
        scratch.clear();
        scratch.extend_from_slice(&self.window_counts);
        let mut total = self.window_total;
        let start = self.oldest_start();
        let last = self.ring.len().saturating_sub(1);
        for (i, x) in self.ring.iter().enumerate() {
            visit(start + i as u64, scratch, total);
            if i < last {
                for (acc, c) in scratch.iter_mut().zip(x.counts()) {
                    *acc -= c;
                }
                total -= x.total();
            }
        }
    }

    pub fn clear(&mut self) {
        self.ring.clear();
        self.window_counts.iter_mut().for_each(|c| *c = 0);
        self.window_total = 0;
        self.t = 0;
    }
}

/// Windowed KS detector on binned counts.
#[derive(Debug, Clone)]
pub struct KsDetector {
    cdf0: SpectrumCdf,
    config: DetectorConfig,
    state: WindowState,
    gate: AlarmGate,
    scratch: Vec<u64>,
}

impl KsDetector {
    pub fn new(cdf0: SpectrumCdf, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let state = WindowState::new(cdf0.bin_count(), config.window)?;
        Ok(Self {
            gate: AlarmGate::new(config.threshold, AlarmRule::AtLeast, config.post_alarm),
            scratch: Vec::with_capacity(cdf0.bin_count()),
            cdf0,
            config,
            state,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn state(&self) -> &WindowState {
        &self.state
    }

    /// Appends `x` and evaluates `W_t`.
    pub fn step(&mut self, x: CountVector) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        self.state.push(x)?;
        let t = self.state.t();
        let cdf0 = self.cdf0.values();
        let mut best: Option<(f64, u64, usize)> = None;
        self.state.sweep(&mut self.scratch, |s, counts, total| {
            if total == 0 {
                return;
            }
            let (gap, j) = max_cdf_gap(cdf0, counts, total);
            let stat = (total as f64).sqrt() * gap;
            if best.is_none_or(|(b, _, _)| stat > b) {
                best = Some((stat, s, j));
            }
        });
        Ok(match best {
            None => StepOutcome::skipped(t),
            Some((w_stat, s, j)) => StepOutcome {
                t,
                w_stat,
                alarm: self.gate.decide(t, w_stat, false),
                argmax_start: Some(s),
                argmax_bin: Some(j + 1),
                skipped: false,
            },
        })
    }

    pub fn reset(&mut self) {
        self.state.clear();
        self.gate.reset();
    }
}

impl SequentialDetector for KsDetector {
    fn step(&mut self, obs: &Observation) -> Result<StepOutcome> {
        match obs {
            Observation::Counts(x) => KsDetector::step(self, x.clone()),
            Observation::Samples(_) => Err(Error::UnsupportedObservation("binned KS needs counts")),
        }
    }

    fn threshold(&self) -> f64 {
        self.gate.threshold()
    }

    fn alarm_rule(&self) -> AlarmRule {
        self.gate.rule()
    }

    fn reset(&mut self) {
        KsDetector::reset(self)
    }
}

const DEFAULT_BUCKETS: usize = 2048;
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
struct RawStep {
    /// Reference-CDF values `F₀(y)` of the step's samples, ascending.
    u: Vec<f64>,
    /// Start offsets of each bucket in `u`; length `buckets + 1`.
    offsets: Vec<u32>,
}

impl RawStep {
    fn bucket(&self, b: usize) -> &[f64] {
        &self.u[self.offsets[b] as usize..self.offsets[b + 1] as usize]
    }

    fn bucket_count(&self, b: usize) -> u64 {
        u64::from(self.offsets[b + 1] - self.offsets[b])
    }
}

/// Windowed KS detector on raw samples, `W_t = max_s D_{s:t}`.
///
/// Samples are mapped through the continuous reference CDF and filed into
/// equal-width buckets on `[0, 1]`. For each window, bucket counts bound the
/// empirical-CDF gap inside every bucket to within `1/B`; only buckets whose
/// upper bound can still beat the best exact gap are opened and their samples
/// evaluated at the jump points. The result is exact, identical to
/// [`crate::ks::ks_distance_raw`] on the pooled window.
pub struct RawKsDetector<F> {
    cdf0: F,
    config: DetectorConfig,
    gate: AlarmGate,
    buckets: usize,
    ring: VecDeque<RawStep>,
    window_counts: Vec<u64>,
    window_total: u64,
    t: u64,
    scratch: Vec<u64>,
    candidates: Vec<(f64, usize, u64)>,
    gather: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Send> RawKsDetector<F> {
    pub fn new(cdf0: F, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            cdf0,
            gate: AlarmGate::new(config.threshold, AlarmRule::AtLeast, config.post_alarm),
            config,
            buckets: DEFAULT_BUCKETS,
            ring: VecDeque::with_capacity(config.window),
            window_counts: vec![0; DEFAULT_BUCKETS],
            window_total: 0,
            t: 0,
            scratch: Vec::new(),
            candidates: Vec::new(),
            gather: Vec::new(),
        })
    }

    /// Changes the bucket count; only allowed before the first step.
    pub fn with_buckets(mut self, buckets: usize) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::config("bucket count must be positive"));
        }
        if self.t != 0 {
            return Err(Error::config("bucket count must be set before streaming"));
        }
        self.buckets = buckets;
        self.window_counts = vec![0; buckets];
        Ok(self)
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    fn prepare(&self, batch: &RawSampleBatch) -> RawStep {
        let b = self.buckets;
        let mut u: Vec<f64> = batch.samples().iter().map(|&y| (self.cdf0)(y).clamp(0.0, 1.0)).collect();
        u.sort_unstable_by(f64::total_cmp);
        let mut offsets = vec![0u32; b + 1];
        for &v in &u {
            let k = ((v * b as f64) as usize).min(b - 1);
            offsets[k + 1] += 1;
        }
        for k in 0..b {
            offsets[k + 1] += offsets[k];
        }
        RawStep { u, offsets }
    }

    pub fn step(&mut self, batch: &RawSampleBatch) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        let step = self.prepare(batch);
        if self.ring.len() == self.config.window {
            let old = self.ring.pop_front().expect("window >= 1");
            for (k, acc) in self.window_counts.iter_mut().enumerate() {
                *acc -= old.bucket_count(k);
            }
            self.window_total -= old.u.len() as u64;
        }
        for (k, acc) in self.window_counts.iter_mut().enumerate() {
            *acc += step.bucket_count(k);
        }
        self.window_total += step.u.len() as u64;
        self.ring.push_back(step);
        self.t += 1;

        let t = self.t;
        let start = t + 1 - self.ring.len() as u64;
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.window_counts);
        let mut total = self.window_total;
        let mut best: Option<(f64, u64)> = None;
        for i in 0..self.ring.len() {
            if total > 0 {
                let stat = self.window_sup(i, total);
                if best.is_none_or(|(b, _)| stat > b) {
                    best = Some((stat, start + i as u64));
                }
            }
            let old = &self.ring[i];
            for (k, acc) in self.scratch.iter_mut().enumerate() {
                *acc -= old.bucket_count(k);
            }
            total -= old.u.len() as u64;
        }
        Ok(match best {
            None => StepOutcome::skipped(t),
            Some((w_stat, s)) => StepOutcome {
                t,
                w_stat,
                alarm: self.gate.decide(t, w_stat, false),
                argmax_start: Some(s),
                argmax_bin: None,
                skipped: false,
            },
        })
    }

    /// Exact `√n · sup |F̂ − F₀|` over ring entries `first..`, whose bucket
    /// counts are in `self.scratch`.
    fn window_sup(&mut self, first: usize, total: u64) -> f64 {
        let n = total as f64;
        let bf = self.buckets as f64;
        self.candidates.clear();
        let mut below = 0u64;
        let mut floor = 0.0f64;
        for (k, &c) in self.scratch.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let lo = k as f64 / bf;
            let hi = (k + 1) as f64 / bf;
            let f_below = below as f64 / n;
            let f_upto = (below + c) as f64 / n;
            // The first sample in the bucket sits at or above `lo` and the last
            // below `hi`, which pins the bucket's gap between these bounds.
            let lower = (lo - f_below).max(f_upto - hi);
            let upper = (f_upto - lo).max(hi - f_below);
            floor = floor.max(lower - BOUND_SLACK);
            self.candidates.push((upper + BOUND_SLACK, k, below));
            below += c;
        }
        self.candidates.retain(|c| c.0 >= floor);
        self.candidates.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

        let mut best = 0.0f64;
        for &(upper, k, below) in &self.candidates {
            if upper < best {
                break;
            }
            self.gather.clear();
            for step in self.ring.range(first..) {
                self.gather.extend_from_slice(step.bucket(k));
            }
            self.gather.sort_unstable_by(f64::total_cmp);
            for (r, &u) in self.gather.iter().enumerate() {
                best = best.max(order_statistic_gap(below as usize + r + 1, n, u));
            }
        }
        n.sqrt() * best
    }

    pub fn reset(&mut self) {
        self.ring.clear();
        self.window_counts.iter_mut().for_each(|c| *c = 0);
        self.window_total = 0;
        self.t = 0;
        self.gate.reset();
    }
}

impl<F: Fn(f64) -> f64 + Send> SequentialDetector for RawKsDetector<F> {
    fn step(&mut self, obs: &Observation) -> Result<StepOutcome> {
        match obs {
            Observation::Samples(batch) => RawKsDetector::step(self, batch),
            Observation::Counts(_) => Err(Error::UnsupportedObservation("raw-sample KS needs samples")),
        }
    }

    fn threshold(&self) -> f64 {
        self.gate.threshold()
    }

    fn alarm_rule(&self) -> AlarmRule {
        self.gate.rule()
    }

    fn reset(&mut self) {
        RawKsDetector::reset(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::{ks_distance, ks_distance_raw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_bin() -> SpectrumCdf {
        SpectrumCdf::new(vec![0.5, 1.0]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::new(0, 1.0).validate().is_err());
        assert!(DetectorConfig::new(3, 0.0).validate().is_err());
        assert!(DetectorConfig::new(3, f64::NAN).validate().is_err());
        assert!(DetectorConfig::new(1, 1e-9).validate().is_ok());
    }

    #[test]
    fn two_window_hand_example() {
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(2, 1.0)).unwrap();
        let o1 = det.step(CountVector::new(vec![50, 50])).unwrap();
        assert_eq!(o1.w_stat, 0.0);
        assert!(!o1.alarm);
        let o2 = det.step(CountVector::new(vec![100, 0])).unwrap();
        // Δ_{1:2} = √200·|0.5 − 0.75| ≈ 3.54, Δ_{2:2} = √100·0.5 = 5.
        assert_eq!(o2.w_stat, 5.0);
        assert!(o2.alarm);
        assert_eq!(o2.argmax_start, Some(2));
        assert_eq!(o2.argmax_bin, Some(1));
    }

    #[test]
    fn unattainable_threshold_never_alarms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(10, 1e10)).unwrap();
        for _ in 0..100 {
            let x = CountVector::new(vec![rng.random_range(0..50), rng.random_range(0..50)]);
            assert!(!det.step(x).unwrap().alarm);
        }
    }

    #[test]
    fn all_zero_input_is_skipped() {
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(3, 1.0)).unwrap();
        for t in 1..=5 {
            let o = det.step(CountVector::zeros(2)).unwrap();
            assert!(o.skipped);
            assert_eq!(o.t, t);
            assert_eq!(o.w_stat, 0.0);
            assert!(!o.alarm);
        }
        // Data in one step only; older empty windows are ignored.
        let o = det.step(CountVector::new(vec![3, 1])).unwrap();
        assert!(!o.skipped);
        assert_eq!(o.argmax_start, Some(4));
    }

    #[test]
    fn empty_steps_inside_window_still_count_as_starts() {
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(3, 100.0)).unwrap();
        det.step(CountVector::new(vec![10, 0])).unwrap();
        det.step(CountVector::zeros(2)).unwrap();
        let o = det.step(CountVector::zeros(2)).unwrap();
        // Windows starting at 2 and 3 are empty; only s = 1 contributes.
        assert_eq!(o.argmax_start, Some(1));
        assert_eq!(o.w_stat, 10f64.sqrt() * 0.5);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(3, 1.0)).unwrap();
        assert_eq!(det.step(CountVector::new(vec![1, 2, 3])), Err(Error::DimensionMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn halt_mode_stops_after_first_alarm() {
        let mut cfg = DetectorConfig::new(2, 1.0);
        cfg.post_alarm = PostAlarm::Halt;
        let mut det = KsDetector::new(two_bin(), cfg).unwrap();
        assert!(det.step(CountVector::new(vec![100, 0])).unwrap().alarm);
        assert_eq!(det.step(CountVector::new(vec![1, 1])), Err(Error::Halted(1)));
        det.reset();
        assert!(det.step(CountVector::new(vec![1, 1])).is_ok());
    }

    #[test]
    fn burn_in_uses_all_available_starts() {
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(50, 100.0)).unwrap();
        for t in 1..=5u64 {
            let o = det.step(CountVector::new(vec![t, 5])).unwrap();
            let s = o.argmax_start.unwrap();
            assert!((1..=t).contains(&s));
        }
        assert_eq!(det.state().len(), 5);
    }

    fn brute_force_w(cdf0: &SpectrumCdf, ring: &[CountVector]) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for s in 0..ring.len() {
            let mut agg = vec![0u64; cdf0.bin_count()];
            for x in &ring[s..] {
                for (a, c) in agg.iter_mut().zip(x.counts()) {
                    *a += c;
                }
            }
            let agg = CountVector::new(agg);
            if agg.total() == 0 {
                continue;
            }
            let d = ks_distance(cdf0, &agg).unwrap();
            if best.is_none_or(|(b, _)| d > b) {
                best = Some((d, s));
            }
        }
        best
    }

    #[test]
    fn incremental_matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bins = 12;
        let weights: Vec<f64> = (0..bins).map(|_| rng.random_range(0.1..1.0)).collect();
        let cdf0 = SpectrumCdf::from_weights(&weights).unwrap();
        let window = 7;
        let mut det = KsDetector::new(cdf0.clone(), DetectorConfig::new(window, 2.0)).unwrap();
        let mut history: Vec<CountVector> = Vec::new();
        for _ in 0..1000 {
            let sparse = rng.random_bool(0.2);
            let x = CountVector::new((0..bins).map(|_| if sparse { 0 } else { rng.random_range(0..6) }).collect());
            history.push(x.clone());
            let out = det.step(x).unwrap();
            let lo = history.len().saturating_sub(window);
            let expected = brute_force_w(&cdf0, &history[lo..]);
            match expected {
                None => assert!(out.skipped),
                Some((w, s)) => {
                    assert_eq!(out.w_stat.to_bits(), w.to_bits());
                    assert_eq!(out.argmax_start, Some((lo + s + 1) as u64));
                    assert_eq!(out.alarm, w >= 2.0);
                }
            }
            let (counts, total) = det.state().recount();
            assert_eq!(counts, det.state().window_counts());
            assert_eq!(total, det.state().window_total());
            assert!(det.state().len() <= window);
        }
    }

    #[test]
    fn single_window_equals_per_step_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cdf0 = SpectrumCdf::from_weights(&[1.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
        let mut det = KsDetector::new(cdf0.clone(), DetectorConfig::new(1, 1.0)).unwrap();
        for _ in 0..200 {
            let x = CountVector::new((0..5).map(|_| rng.random_range(0..20)).collect());
            let out = det.step(x.clone()).unwrap();
            if x.total() > 0 {
                assert_eq!(out.w_stat, ks_distance(&cdf0, &x).unwrap());
                assert_eq!(out.argmax_start, Some(out.t));
            }
        }
    }

    fn normal_cdf(y: f64) -> f64 {
        0.5 * libm::erfc(-y / std::f64::consts::SQRT_2)
    }

    #[test]
    fn raw_detector_matches_pooled_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let window = 6;
        for buckets in [1usize, 7, 64, 2048] {
            let mut det = RawKsDetector::new(normal_cdf, DetectorConfig::new(window, 1.5))
                .unwrap()
                .with_buckets(buckets)
                .unwrap();
            let mut history: Vec<Vec<f64>> = Vec::new();
            for step in 0..120 {
                let n = if step % 17 == 3 { 0 } else { rng.random_range(1..40) };
                let shift = if step > 60 { 0.4 } else { 0.0 };
                let ys: Vec<f64> = (0..n)
                    .map(|_| {
                        let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                        // Coarse rounding produces ties.
                        ((z + shift) * 8.0).round() / 8.0
                    })
                    .collect();
                history.push(ys.clone());
                let out = det.step(&RawSampleBatch::new(ys).unwrap()).unwrap();
                let lo = history.len().saturating_sub(window);
                let mut expected: Option<(f64, usize)> = None;
                for s in lo..history.len() {
                    let pooled: Vec<f64> = history[s..].iter().flatten().copied().collect();
                    if pooled.is_empty() {
                        continue;
                    }
                    let d = ks_distance_raw(normal_cdf, &RawSampleBatch::new(pooled).unwrap()).unwrap();
                    if expected.is_none_or(|(b, _)| d > b) {
                        expected = Some((d, s));
                    }
                }
                match expected {
                    None => assert!(out.skipped),
                    Some((w, s)) => {
                        assert_eq!(out.w_stat, w, "buckets={buckets} step={step}");
                        assert_eq!(out.argmax_start, Some(s as u64 + 1));
                    }
                }
            }
        }
    }

    #[test]
    fn raw_detector_rejects_counts() {
        let mut det = RawKsDetector::new(normal_cdf, DetectorConfig::new(2, 1.0)).unwrap();
        let obs = Observation::Counts(CountVector::new(vec![1]));
        assert!(matches!(SequentialDetector::step(&mut det, &obs), Err(Error::UnsupportedObservation(_))));
        let mut det = KsDetector::new(two_bin(), DetectorConfig::new(2, 1.0)).unwrap();
        let obs = Observation::Samples(RawSampleBatch::new(vec![0.1]).unwrap());
        assert!(SequentialDetector::step(&mut det, &obs).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn w_dominates_single_step_statistic(
                steps in prop::collection::vec(prop::collection::vec(0u64..9, 6), 1..30),
                window in 1usize..8,
            ) {
                let cdf0 = SpectrumCdf::from_weights(&[1.0, 1.0, 2.0, 2.0, 1.0, 1.0]).unwrap();
                let mut det = KsDetector::new(cdf0.clone(), DetectorConfig::new(window, 3.0)).unwrap();
                for counts in steps {
                    let x = CountVector::new(counts);
                    let out = det.step(x.clone()).unwrap();
                    if x.total() > 0 {
                        prop_assert!(out.w_stat >= ks_distance(&cdf0, &x).unwrap());
                    }
                    if !out.skipped {
                        let s = out.argmax_start.unwrap();
                        let lo = out.t.saturating_sub(window as u64 - 1).max(1);
                        prop_assert!(s >= lo && s <= out.t);
                        prop_assert_eq!(out.alarm, out.w_stat >= 3.0);
                    }
                }
            }
        }
    }
}
