// SPDX-License-Identifier: MIT OR Apache-2.0

//! Comparison detectors: pooled KS, exponential-family Bayes factors and
//! generalized likelihood ratios for Poisson channel counts and Gaussian
//! per-step means.

use std::collections::VecDeque;

use crate::detector::{AlarmGate, AlarmRule, Observation, SequentialDetector};
use crate::error::{Error, Result};
use crate::ks::{max_cdf_gap, CountVector, SpectrumCdf};
use crate::simulation::Density;
use crate::window::{DetectorConfig, PostAlarm, StepOutcome, WindowState};

/// Running per-bin counts since `t = 1`.
#[derive(Debug, Clone)]
pub struct PooledState {
    counts: Vec<u64>,
    total: u64,
    t: u64,
}

impl PooledState {
    pub fn new(bins: usize) -> Self {
        Self { counts: vec![0; bins], total: 0, t: 0 }
    }

    pub fn push(&mut self, x: &CountVector) -> Result<()> {
        if x.bin_count() != self.counts.len() {
            return Err(Error::DimensionMismatch { expected: self.counts.len(), found: x.bin_count() });
        }
        for (acc, c) in self.counts.iter_mut().zip(x.counts()) {
            *acc += c;
        }
        self.total += x.total();
        self.t += 1;
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn t(&self) -> u64 {
        self.t
    }
}

/// Pooled KS rule: `κ_t = (Σ_{k≤t} N_k) · max_j |F⁰(j) − F̂_{1:t}(j)|`,
/// alarming when `κ_t > c`.
///
/// The multiplier is the raw pooled count, not its square root, so `κ_t` is
/// not Kolmogorov distributed and grows with `t` under the null.
#[derive(Debug, Clone)]
pub struct PooledKsDetector {
    cdf0: SpectrumCdf,
    state: PooledState,
    gate: AlarmGate,
}

impl PooledKsDetector {
    pub fn new(cdf0: SpectrumCdf, threshold: f64, post_alarm: PostAlarm) -> Result<Self> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::config(format!("threshold must be positive, got {threshold}")));
        }
        Ok(Self {
            state: PooledState::new(cdf0.bin_count()),
            cdf0,
            gate: AlarmGate::new(threshold, AlarmRule::Above, post_alarm),
        })
    }

    pub fn state(&self) -> &PooledState {
        &self.state
    }

    pub fn step(&mut self, x: &CountVector) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        self.state.push(x)?;
        let t = self.state.t();
        if self.state.total() == 0 {
            return Ok(StepOutcome::skipped(t));
        }
        let (gap, j) = max_cdf_gap(self.cdf0.values(), self.state.counts(), self.state.total());
        let kappa = self.state.total() as f64 * gap;
        Ok(StepOutcome {
            t,
            w_stat: kappa,
            alarm: self.gate.decide(t, kappa, false),
            argmax_start: Some(1),
            argmax_bin: Some(j + 1),
            skipped: false,
        })
    }
}

impl SequentialDetector for PooledKsDetector {
    fn step(&mut self, obs: &Observation) -> Result<StepOutcome> {
        match obs {
            Observation::Counts(x) => PooledKsDetector::step(self, x),
            Observation::Samples(_) => Err(Error::UnsupportedObservation("pooled KS needs counts")),
        }
    }

    fn threshold(&self) -> f64 {
        self.gate.threshold()
    }

    fn alarm_rule(&self) -> AlarmRule {
        self.gate.rule()
    }

    fn reset(&mut self) {
        self.state = PooledState::new(self.cdf0.bin_count());
        self.gate.reset();
    }
}

/// Known per-channel Poisson rates `λ⁽⁰⁾` (counts per step).
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonNull {
    rates: Vec<f64>,
    active: Vec<usize>,
    ln_rates: Vec<f64>,
    active_rate_sum: f64,
}

impl PoissonNull {
    /// Channels with zero rate are left out of every likelihood ratio.
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(r) = rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::domain(format!("channel rate {r} is negative or not finite")));
        }
        let active: Vec<usize> = (0..rates.len()).filter(|&j| rates[j] > 0.0).collect();
        if active.is_empty() {
            return Err(Error::domain("all channel rates are zero"));
        }
        let excluded = rates.len() - active.len();
        if excluded > 0 {
            log::warn!("{excluded} zero-rate channel(s) excluded from Poisson likelihoods");
        }
        let ln_rates = rates.iter().map(|&r| if r > 0.0 { r.ln() } else { 0.0 }).collect();
        let active_rate_sum = active.iter().map(|&j| rates[j]).sum();
        Ok(Self { rates, active, ln_rates, active_rate_sum })
    }

    /// `λ⁽⁰⁾_j = μ · w⁽⁰⁾_j`.
    pub fn from_density(density: &Density, mean_count: f64) -> Result<Self> {
        if !(mean_count > 0.0) {
            return Err(Error::domain("mean count per step must be positive"));
        }
        Self::new(density.weights().iter().map(|w| w * mean_count).collect())
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn bin_count(&self) -> usize {
        self.rates.len()
    }

    pub fn active_channels(&self) -> &[usize] {
        &self.active
    }
}

/// Gamma prior on a channel rate, by shape and scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(Error::domain("gamma prior needs positive finite shape and scale"));
        }
        Ok(Self { shape, scale })
    }
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 1.0, scale: 1.0 }
    }
}

const TABLE_LIMIT: u64 = 1 << 20;

/// Memoised `f(s)` for small integer `s`, falling back to direct evaluation.
#[derive(Debug, Clone)]
struct IntTable {
    values: Vec<f64>,
    f: fn(f64, f64) -> f64,
    param: f64,
}

impl IntTable {
    fn new(f: fn(f64, f64) -> f64, param: f64) -> Self {
        Self { values: Vec::new(), f, param }
    }

    fn reserve_upto(&mut self, s: u64) {
        let want = (s.min(TABLE_LIMIT) + 1) as usize;
        while self.values.len() < want {
            let k = self.values.len() as f64;
            self.values.push((self.f)(k, self.param));
        }
    }

    #[inline]
    fn get(&self, s: u64) -> f64 {
        match self.values.get(s as usize) {
            Some(&v) => v,
            None => (self.f)(s as f64, self.param),
        }
    }
}

fn ln_gamma_shifted(s: f64, shape: f64) -> f64 {
    libm::lgamma(shape + s)
}

fn x_ln_x(s: f64, _: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * s.ln()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn validate_window(config: &DetectorConfig) -> Result<()> {
    if config.window == 0 {
        return Err(Error::config("window size must be at least 1"));
    }
    if config.threshold.is_nan() {
        return Err(Error::config("threshold must not be NaN"));
    }
    Ok(())
}

/// Log Bayes factor of one window under independent gamma priors, summed over
/// the active channels, given the per-channel window sums `counts`.
fn ef_poisson_window_log_bf(
    null: &PoissonNull,
    prior: GammaPrior,
    ln_gamma: &IntTable,
    counts: &[u64],
    steps: u64,
) -> f64 {
    let a = prior.shape;
    let rate = 1.0 / prior.scale;
    let mut sum_lg = 0.0;
    let mut sum_s = 0u64;
    let mut sum_s_ln_rate = 0.0;
    for &j in &null.active {
        let s = counts[j];
        sum_lg += ln_gamma.get(s);
        sum_s += s;
        sum_s_ln_rate += s as f64 * null.ln_rates[j];
    }
    let channels = null.active.len() as f64;
    let m = steps as f64;
    sum_lg
        - channels * (libm::lgamma(a) - a * rate.ln())
        - (channels * a + sum_s as f64) * (rate + m).ln()
        - sum_s_ln_rate
        + m * null.active_rate_sum
}

/// Bayes-factor rule on Poisson channel counts.
///
/// The statistic is `ln Σ_s BF(s, t)`, the natural log of the sum over window
/// starts of the gamma–Poisson marginal likelihood ratio; it is compared on
/// that scale against the configured threshold so that it stays finite for
/// any finite input.
#[derive(Debug, Clone)]
pub struct EfPoissonDetector {
    null: PoissonNull,
    prior: GammaPrior,
    state: WindowState,
    gate: AlarmGate,
    ln_gamma: IntTable,
    scratch: Vec<u64>,
    log_bfs: Vec<f64>,
}

impl EfPoissonDetector {
    pub fn new(null: PoissonNull, prior: GammaPrior, config: DetectorConfig) -> Result<Self> {
        validate_window(&config)?;
        Ok(Self {
            state: WindowState::new(null.bin_count(), config.window)?,
            gate: AlarmGate::new(config.threshold, AlarmRule::AtLeast, config.post_alarm),
            ln_gamma: IntTable::new(ln_gamma_shifted, prior.shape),
            prior,
            null,
            scratch: Vec::new(),
            log_bfs: Vec::new(),
        })
    }

    pub fn step(&mut self, x: CountVector) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        self.state.push(x)?;
        let t = self.state.t();
        self.ln_gamma.reserve_upto(self.state.window_total());
        self.log_bfs.clear();
        let (null, prior, table, out) = (&self.null, self.prior, &self.ln_gamma, &mut self.log_bfs);
        let mut best: Option<(f64, u64)> = None;
        self.state.sweep(&mut self.scratch, |s, counts, _| {
            let lbf = ef_poisson_window_log_bf(null, prior, table, counts, t - s + 1);
            out.push(lbf);
            if best.is_none_or(|(b, _)| lbf > b) {
                best = Some((lbf, s));
            }
        });
        let stat = log_sum_exp(&self.log_bfs);
        Ok(StepOutcome {
            t,
            w_stat: stat,
            alarm: self.gate.decide(t, stat, false),
            argmax_start: best.map(|(_, s)| s),
            argmax_bin: None,
            skipped: false,
        })
    }
}

/// Log GLR of one window: `Σ_j [S_j ln(S_j / (m λ⁰_j)) − S_j + m λ⁰_j]`.
fn glr_poisson_window(null: &PoissonNull, xlnx: &IntTable, counts: &[u64], steps: u64) -> f64 {
    let m = steps as f64;
    let ln_m = m.ln();
    let mut sum = 0.0;
    for &j in &null.active {
        let s = counts[j];
        let expected = m * null.rates[j];
        let term = if s == 0 {
            expected
        } else {
            let sf = s as f64;
            xlnx.get(s) - sf * (ln_m + null.ln_rates[j]) - sf + expected
        };
        sum += term.max(0.0);
    }
    sum
}

/// Windowed GLR on Poisson channel counts with the channel-wise MLE
/// `λ̂_j = S_j / m`.
#[derive(Debug, Clone)]
pub struct GlrPoissonDetector {
    null: PoissonNull,
    state: WindowState,
    gate: AlarmGate,
    xlnx: IntTable,
    scratch: Vec<u64>,
}

impl GlrPoissonDetector {
    pub fn new(null: PoissonNull, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            state: WindowState::new(null.bin_count(), config.window)?,
            gate: AlarmGate::new(config.threshold, AlarmRule::AtLeast, config.post_alarm),
            xlnx: IntTable::new(x_ln_x, 0.0),
            null,
            scratch: Vec::new(),
        })
    }

    pub fn step(&mut self, x: CountVector) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        self.state.push(x)?;
        let t = self.state.t();
        self.xlnx.reserve_upto(self.state.window_total());
        let (null, table) = (&self.null, &self.xlnx);
        let mut best: Option<(f64, u64)> = None;
        self.state.sweep(&mut self.scratch, |s, counts, _| {
            let g = glr_poisson_window(null, table, counts, t - s + 1);
            if best.is_none_or(|(b, _)| g > b) {
                best = Some((g, s));
            }
        });
        let (stat, s) = best.expect("window holds the current step");
        Ok(StepOutcome {
            t,
            w_stat: stat,
            alarm: self.gate.decide(t, stat, false),
            argmax_start: Some(s),
            argmax_bin: None,
            skipped: false,
        })
    }
}

macro_rules! counts_detector_impl {
    ($ty:ty, $what:literal) => {
        impl SequentialDetector for $ty {
            fn step(&mut self, obs: &Observation) -> Result<StepOutcome> {
                match obs {
                    Observation::Counts(x) => <$ty>::step(self, x.clone()),
                    Observation::Samples(_) => Err(Error::UnsupportedObservation($what)),
                }
            }

            fn threshold(&self) -> f64 {
                self.gate.threshold()
            }

            fn alarm_rule(&self) -> AlarmRule {
                self.gate.rule()
            }

            fn reset(&mut self) {
                self.state.clear();
                self.gate.reset();
            }
        }
    };
}

counts_detector_impl!(EfPoissonDetector, "Poisson EF needs counts");
counts_detector_impl!(GlrPoissonDetector, "Poisson GLR needs counts");

/// Pre-change Gaussian model for per-step means: raw observations are
/// `N(mean, σ²)`, so a mean of `n` of them is `N(mean, σ²/n)`. `tau` is the
/// prior standard deviation of the shift for the Bayes-factor rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNull {
    pub mean: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl GaussianNull {
    pub fn new(mean: f64, sigma: f64, tau: f64) -> Result<Self> {
        if !mean.is_finite() || !(sigma > 0.0) || !(tau > 0.0) || !sigma.is_finite() || !tau.is_finite() {
            return Err(Error::domain("gaussian null needs finite mean and positive sigma, tau"));
        }
        Ok(Self { mean, sigma, tau })
    }
}

/// One step's sample mean and the number of observations behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStep {
    pub mean: f64,
    pub n: u64,
}

impl GaussianStep {
    pub fn new(mean: f64, n: u64) -> Self {
        Self { mean, n }
    }
}

fn gaussian_step_from(obs: &Observation) -> Result<GaussianStep> {
    match obs {
        Observation::Samples(batch) => Ok(GaussianStep { mean: batch.mean().unwrap_or(0.0), n: batch.count() as u64 }),
        Observation::Counts(_) => Err(Error::UnsupportedObservation("gaussian rules need raw samples")),
    }
}

/// Sufficient statistics of a window of means, relative to the null mean.
#[derive(Debug, Clone, Copy, Default)]
struct MeanSums {
    /// `Σ n_k`
    n: f64,
    /// `Σ n_k (ȳ_k − μ₀)`
    y: f64,
    /// `Σ n_k (ȳ_k − μ₀)²`
    yy: f64,
    /// number of non-empty steps
    m: u64,
}

/// Visits windows newest start first, handing each its sufficient statistics.
fn sweep_means(ring: &VecDeque<GaussianStep>, t: u64, null_mean: f64, mut visit: impl FnMut(u64, MeanSums)) {
    let mut sums = MeanSums::default();
    for (back, step) in ring.iter().rev().enumerate() {
        if step.n > 0 {
            let n = step.n as f64;
            let d = step.mean - null_mean;
            sums.n += n;
            sums.y += n * d;
            sums.yy += n * d * d;
            sums.m += 1;
        }
        visit(t - back as u64, sums);
    }
}

fn ef_gaussian_log_bf(null: &GaussianNull, sums: MeanSums) -> f64 {
    let var = null.sigma * null.sigma;
    let precision = sums.n / var;
    let score = sums.y / var;
    let tau2 = null.tau * null.tau;
    let shrink = 1.0 + tau2 * precision;
    -0.5 * shrink.ln() + tau2 * score * score / (2.0 * shrink)
}

fn glr_gaussian_mean(null: &GaussianNull, sums: MeanSums) -> f64 {
    sums.y * sums.y / (2.0 * null.sigma * null.sigma * sums.n)
}

fn glr_gaussian_mean_sd(null: &GaussianNull, sums: MeanSums) -> f64 {
    let m = sums.m as f64;
    let var0 = null.sigma * null.sigma;
    let s2 = ((sums.yy - sums.y * sums.y / sums.n) / m).max(f64::MIN_POSITIVE);
    -0.5 * m * s2.ln() - 0.5 * m + 0.5 * m * var0.ln() + sums.yy / (2.0 * var0)
}

/// Bayes-factor rule for a mean shift in Gaussian data, with a `N(0, τ²)`
/// prior on the shift. Like [`EfPoissonDetector`], the statistic is
/// `ln Σ_s BF(s, t)`.
#[derive(Debug, Clone)]
pub struct EfGaussianDetector {
    null: GaussianNull,
    window: usize,
    ring: VecDeque<GaussianStep>,
    t: u64,
    gate: AlarmGate,
    log_bfs: Vec<f64>,
}

impl EfGaussianDetector {
    pub fn new(null: GaussianNull, config: DetectorConfig) -> Result<Self> {
        validate_window(&config)?;
        Ok(Self {
            null,
            window: config.window,
            ring: VecDeque::with_capacity(config.window),
            t: 0,
            gate: AlarmGate::new(config.threshold, AlarmRule::AtLeast, config.post_alarm),
            log_bfs: Vec::new(),
        })
    }

    pub fn step(&mut self, y: GaussianStep) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        push_bounded(&mut self.ring, y, self.window);
        self.t += 1;
        let t = self.t;
        self.log_bfs.clear();
        let mut best: Option<(f64, u64)> = None;
        let (null, out) = (&self.null, &mut self.log_bfs);
        sweep_means(&self.ring, t, null.mean, |s, sums| {
            let lbf = if sums.n > 0.0 { ef_gaussian_log_bf(null, sums) } else { 0.0 };
            out.push(lbf);
            if best.is_none_or(|(b, _)| lbf >= b) {
                best = Some((lbf, s));
            }
        });
        let stat = log_sum_exp(&self.log_bfs);
        Ok(StepOutcome {
            t,
            w_stat: stat,
            alarm: self.gate.decide(t, stat, false),
            argmax_start: best.map(|(_, s)| s),
            argmax_bin: None,
            skipped: false,
        })
    }
}

/// Windowed GLR for a shift in the mean of Gaussian data; optionally the
/// standard deviation is estimated too (sup over both).
#[derive(Debug, Clone)]
pub struct GlrGaussianDetector {
    null: GaussianNull,
    window: usize,
    estimate_sd: bool,
    ring: VecDeque<GaussianStep>,
    t: u64,
    gate: AlarmGate,
}

impl GlrGaussianDetector {
    pub fn new(null: GaussianNull, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            null,
            window: config.window,
            estimate_sd: false,
            ring: VecDeque::with_capacity(config.window),
            t: 0,
            gate: AlarmGate::new(config.threshold, AlarmRule::AtLeast, config.post_alarm),
        })
    }

    pub fn estimate_sd(mut self, on: bool) -> Self {
        self.estimate_sd = on;
        self
    }

    pub fn step(&mut self, y: GaussianStep) -> Result<StepOutcome> {
        self.gate.ensure_open()?;
        push_bounded(&mut self.ring, y, self.window);
        self.t += 1;
        let t = self.t;
        let mut best: Option<(f64, u64)> = None;
        let (null, estimate_sd) = (&self.null, self.estimate_sd);
        sweep_means(&self.ring, t, null.mean, |s, sums| {
            let usable = if estimate_sd { sums.m >= 2 } else { sums.n > 0.0 };
            if !usable {
                return;
            }
            let g = if estimate_sd { glr_gaussian_mean_sd(null, sums) } else { glr_gaussian_mean(null, sums) };
            if best.is_none_or(|(b, _)| g >= b) {
                best = Some((g, s));
            }
        });
        Ok(match best {
            None => StepOutcome::skipped(t),
            Some((stat, s)) => StepOutcome {
                t,
                w_stat: stat,
                alarm: self.gate.decide(t, stat, false),
                argmax_start: Some(s),
                argmax_bin: None,
                skipped: false,
            },
        })
    }
}

fn push_bounded<T>(ring: &mut VecDeque<T>, item: T, cap: usize) {
    if ring.len() == cap {
        ring.pop_front();
    }
    ring.push_back(item);
}

macro_rules! means_detector_impl {
    ($ty:ty) => {
        impl SequentialDetector for $ty {
            fn step(&mut self, obs: &Observation) -> Result<StepOutcome> {
                let y = gaussian_step_from(obs)?;
                <$ty>::step(self, y)
            }

            fn threshold(&self) -> f64 {
                self.gate.threshold()
            }

            fn alarm_rule(&self) -> AlarmRule {
                self.gate.rule()
            }

            fn reset(&mut self) {
                self.ring.clear();
                self.t = 0;
                self.gate.reset();
            }
        }
    };
}

means_detector_impl!(EfGaussianDetector);
means_detector_impl!(GlrGaussianDetector);
