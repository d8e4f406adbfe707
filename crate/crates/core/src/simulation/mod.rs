// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic count streams: binned densities, Gaussian mixtures, the
//! source-strength model for photopeak anomalies, and scenario generators.

mod poisson;
mod runner;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detector::Observation;
use crate::error::{Error, Result};
use crate::ks::{CountVector, RawSampleBatch, SpectrumCdf};

pub use poisson::sample_poisson;
pub use runner::{
    average_detection_delay, run_replicates, run_scenario, CensoringPolicy, ChangepointPlan, DelayRecord, DelaySummary,
};

const SUM_TOLERANCE: f64 = 1e-12;
const MIXTURE_WEIGHT_TOLERANCE: f64 = 1e-9;

/// One normal component of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

impl MixtureComponent {
    pub fn new(weight: f64, mean: f64, sd: f64) -> Self {
        Self { weight, mean, sd }
    }
}

/// Finite mixture of normal distributions on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MixtureComponent>", into = "Vec<MixtureComponent>")]
pub struct GaussianMixture {
    components: Vec<MixtureComponent>,
}

impl TryFrom<Vec<MixtureComponent>> for GaussianMixture {
    type Error = Error;

    fn try_from(components: Vec<MixtureComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<GaussianMixture> for Vec<MixtureComponent> {
    fn from(m: GaussianMixture) -> Self {
        m.components
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

impl GaussianMixture {
    /// Weights must be non-negative and sum to one (within `1e-9`).
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("a mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight >= 0.0) || !c.mean.is_finite() || !(c.sd > 0.0) || !c.sd.is_finite() {
                return Err(Error::domain(format!("invalid mixture component {c:?}")));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > MIXTURE_WEIGHT_TOLERANCE {
            return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// A single normal distribution.
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(vec![MixtureComponent::new(1.0, mean, sd)])
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.components.iter().map(|c| c.weight * std_normal_cdf((y - c.mean) / c.sd)).sum()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        self.components
            .iter()
            .map(|c| {
                let z = (y - c.mean) / c.sd;
                c.weight * (-0.5 * z * z).exp() / (norm * c.sd)
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    /// `(mean, sd)` when the mixture is a single normal distribution.
    pub fn as_normal(&self) -> Option<(f64, f64)> {
        let first = self.components.iter().find(|c| c.weight > 0.0)?;
        self.components
            .iter()
            .filter(|c| c.weight > 0.0)
            .all(|c| c.mean == first.mean && c.sd == first.sd)
            .then_some((first.mean, first.sd))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = if self.components.len() == 1 {
            &self.components[0]
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = self.components.last().expect("non-empty");
            for c in &self.components {
                acc += c.weight;
                if u < acc {
                    chosen = c;
                    break;
                }
            }
            chosen
        };
        let z: f64 = rng.sample(StandardNormal);
        c.mean + c.sd * z
    }

    /// `w·self + (1 − w)·other` as a mixture.
    fn blend(&self, other: &Self, w: f64) -> Self {
        let scaled = |c: &MixtureComponent, f: f64| MixtureComponent { weight: c.weight * f, ..*c };
        let components = self
            .components
            .iter()
            .map(|c| scaled(c, w))
            .chain(other.components.iter().map(|c| scaled(c, 1.0 - w)))
            .collect();
        Self { components }
    }
}

/// Per-bin probabilities over `D` channels, optionally backed by an analytic
/// distribution on the real line for raw-sample streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analytic: Option<GaussianMixture>,
    /// Interval `[lo, hi]` split into the `D` equal-width channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<(f64, f64)>,
}

impl Density {
    /// Accepts any non-negative weights with a positive total. Weights that
    /// already sum to one within `1e-12` are kept as given; others are
    /// divided by their total.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("a density needs at least one bin"));
        }
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!("weight {w} at bin {} is negative or not finite", j + 1)));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("density weights sum to zero"));
        }
        let weights = if (total - 1.0).abs() > SUM_TOLERANCE {
            weights.into_iter().map(|w| w / total).collect()
        } else {
            weights
        };
        Ok(Self { weights, analytic: None, support: None })
    }

    pub fn uniform(bins: usize) -> Result<Self> {
        Self::new(vec![1.0 / bins as f64; bins])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bin_count(&self) -> usize {
        self.weights.len()
    }

    pub fn cdf(&self) -> Result<SpectrumCdf> {
        SpectrumCdf::from_weights(&self.weights)
    }

    pub fn analytic(&self) -> Option<&GaussianMixture> {
        self.analytic.as_ref()
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Channel (0-based) of a raw value, with out-of-range values folded into
    /// the edge channels. `None` without a declared support.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        let (lo, hi) = self.support?;
        let d = self.weights.len();
        let pos = (y - lo) / (hi - lo) * d as f64;
        Some(if pos < 0.0 { 0 } else { (pos as usize).min(d - 1) })
    }
}

/// Bins a normal mixture into `bins` equal-width channels over `[lo, hi]`;
/// mass below `lo` or above `hi` goes to the first or last channel.
pub fn gaussian_mixture_density(components: &[MixtureComponent], bins: usize, lo: f64, hi: f64) -> Result<Density> {
    if bins < 2 {
        return Err(Error::domain("at least two bins are needed"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(format!("invalid support [{lo}, {hi}]")));
    }
    let mixture = GaussianMixture::new(components.to_vec())?;
    let width = (hi - lo) / bins as f64;
    let mut weights = Vec::with_capacity(bins);
    let mut prev = 0.0;
    for k in 1..bins {
        let c = mixture.cdf(lo + k as f64 * width);
        weights.push(c - prev);
        prev = c;
    }
    weights.push(1.0 - prev);
    let mut density = Density::new(weights)?;
    density.analytic = Some(mixture);
    density.support = Some((lo, hi));
    Ok(density)
}

/// Post-change mixture `w·f₀ + (1 − w)·f_A`.
pub fn mix_densities(f0: &Density, fa: &Density, w: f64) -> Result<Density> {
    if f0.bin_count() != fa.bin_count() {
        return Err(Error::DimensionMismatch { expected: f0.bin_count(), found: fa.bin_count() });
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::domain(format!("mixing weight {w} outside [0, 1]")));
    }
    // Written as a correction to f₀ so that f₀ = f_A or w = 1 return f₀ unchanged.
    let weights = f0.weights.iter().zip(&fa.weights).map(|(a, b)| a + (1.0 - w) * (b - a)).collect();
    let mut out = Density::new(weights)?;
    if let (Some(a), Some(b)) = (&f0.analytic, &fa.analytic) {
        if f0.support == fa.support {
            out.analytic = Some(a.blend(b, w));
            out.support = f0.support;
        }
    }
    Ok(out)
}

/// Count rate (counts per second) of a point source of `strength_mci`
/// millicuries at `distance_m` metres, scaled from a calibration point of
/// 630 counts/s for a 0.844 µCi source at 5 cm with air attenuation.
pub fn source_rate(strength_mci: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::domain(format!("source distance must be positive, got {distance_m}")));
    }
    if !(strength_mci >= 0.0) {
        return Err(Error::domain(format!("source strength must be non-negative, got {strength_mci}")));
    }
    let geometric = (0.05 / distance_m).powi(2);
    Ok(strength_mci / 0.000844 * 630.0 * geometric * (-0.0100029 * (distance_m + 0.05)).exp())
}

/// Weight of the background in the post-change mixture, `λ₀ / (λ₀ + λ_source)`.
pub fn anomaly_weight(background_rate: f64, source_rate: f64) -> Result<f64> {
    if !(background_rate > 0.0) || !(source_rate >= 0.0) {
        return Err(Error::domain("background rate must be positive and source rate non-negative"));
    }
    Ok(background_rate / (background_rate + source_rate))
}

/// A point source seen against a background of `background_rate` counts
/// per step; its counts follow `anomaly`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub strength_mci: f64,
    pub distance_m: f64,
    pub background_rate: f64,
    pub anomaly: Density,
}

impl SourceSpec {
    pub fn source_rate(&self) -> Result<f64> {
        if !(self.strength_mci > 0.0) {
            return Err(Error::domain("source strength must be positive"));
        }
        source_rate(self.strength_mci, self.distance_m)
    }

    pub fn weight(&self) -> Result<f64> {
        anomaly_weight(self.background_rate, self.source_rate()?)
    }

    /// Post-change density `f_c` against background `f0`.
    pub fn post_change(&self, f0: &Density) -> Result<Density> {
        mix_densities(f0, &self.anomaly, self.weight()?)
    }
}

/// Binned multinomial draws for `n` events from cumulative weights.
fn multinomial_from_cdf<R: Rng + ?Sized>(cdf: &[f64], n: u64, rng: &mut R) -> CountVector {
    let mut counts = vec![0u64; cdf.len()];
    let last = cdf.len() - 1;
    for _ in 0..n {
        let u: f64 = rng.random();
        let j = cdf.partition_point(|&c| c <= u).min(last);
        counts[j] += 1;
    }
    CountVector::new(counts)
}

/// One step of the sampling model: `N ∼ Poisson(μ)` events spread over the
/// channels of `density`.
pub fn sample_counts<R: Rng + ?Sized>(density: &Density, mean_count: f64, rng: &mut R) -> Result<CountVector> {
    if !(mean_count > 0.0) {
        return Err(Error::domain("mean count per step must be positive"));
    }
    let cdf = density.cdf()?;
    let n = sample_poisson(mean_count, rng);
    Ok(multinomial_from_cdf(cdf.values(), n, rng))
}

/// Whether a scenario streams binned counts or raw sample values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    #[default]
    Binned,
    Raw,
}

/// Law of the number of events per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountModel {
    /// `N_t ∼ Poisson(μ)`.
    #[default]
    Poisson,
    /// `N_t = round(μ)` every step.
    Fixed,
}

/// Generative description of a stream: `f₀` up to the changepoint, `f_c`
/// after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pre: Density,
    pub post: Density,
    /// Last pre-change step `v`; `None` for a stream without change.
    pub changepoint: Option<u64>,
    /// Mean events per step `μ`.
    pub rate: f64,
    pub horizon: u64,
    #[serde(default)]
    pub mode: SampleMode,
    #[serde(default)]
    pub count_model: CountModel,
}

impl Scenario {
    /// Binned, Poisson-count scenario without a changepoint.
    pub fn new(pre: Density, post: Density, rate: f64, horizon: u64) -> Result<Self> {
        let s = Self {
            pre,
            post,
            changepoint: None,
            rate,
            horizon,
            mode: SampleMode::Binned,
            count_model: CountModel::Poisson,
        };
        s.validate()?;
        Ok(s)
    }

    /// A stream that never leaves `f₀`.
    pub fn null(pre: Density, rate: f64, horizon: u64) -> Result<Self> {
        Self::new(pre.clone(), pre, rate, horizon)
    }

    pub fn with_changepoint(mut self, v: Option<u64>) -> Result<Self> {
        self.changepoint = v;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: SampleMode) -> Result<Self> {
        self.mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_count_model(mut self, model: CountModel) -> Result<Self> {
        self.count_model = model;
        self.validate()?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: u64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    /// The same scenario with the post-change density replaced by `f₀` and
    /// no changepoint.
    pub fn without_change(&self) -> Self {
        Self { post: self.pre.clone(), changepoint: None, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::config(format!("rate must be positive, got {}", self.rate)));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if let Some(v) = self.changepoint {
            if v >= self.horizon {
                return Err(Error::config(format!("changepoint {v} must precede horizon {}", self.horizon)));
            }
        }
        if self.pre.bin_count() != self.post.bin_count() {
            return Err(Error::DimensionMismatch { expected: self.pre.bin_count(), found: self.post.bin_count() });
        }
        if self.mode == SampleMode::Raw && (self.pre.analytic.is_none() || self.post.analytic.is_none()) {
            return Err(Error::config("raw-sample mode needs analytic pre- and post-change densities"));
        }
        if self.count_model == CountModel::Fixed && self.rate.round() < 1.0 {
            return Err(Error::config("fixed counts need a rate of at least 1"));
        }
        Ok(())
    }

    /// `(mean, sd)` of a normal pre-change distribution, for Gaussian rules.
    pub fn gaussian_null(&self) -> Result<(f64, f64)> {
        self.pre
            .analytic()
            .and_then(GaussianMixture::as_normal)
            .ok_or_else(|| Error::config("gaussian rules need a single-normal pre-change density"))
    }

    pub fn generator(&self) -> Result<StreamGenerator> {
        self.validate()?;
        Ok(StreamGenerator {
            pre: Segment::new(&self.pre)?,
            post: Segment::new(&self.post)?,
            changepoint: self.changepoint,
            rate: self.rate,
            mode: self.mode,
            count_model: self.count_model,
        })
    }
}

#[derive(Debug, Clone)]
struct Segment {
    cdf: Vec<f64>,
    analytic: Option<GaussianMixture>,
}

impl Segment {
    fn new(d: &Density) -> Result<Self> {
        Ok(Self { cdf: d.cdf()?.values().to_vec(), analytic: d.analytic.clone() })
    }
}

/// Draws observations for a [`Scenario`] step by step.
#[derive(Debug, Clone)]
pub struct StreamGenerator {
    pre: Segment,
    post: Segment,
    changepoint: Option<u64>,
    rate: f64,
    mode: SampleMode,
    count_model: CountModel,
}

impl StreamGenerator {
    pub fn changepoint(&self) -> Option<u64> {
        self.changepoint
    }

    pub fn set_changepoint(&mut self, v: Option<u64>) {
        self.changepoint = v;
    }

    /// Observation at time `t` (1-based).
    pub fn observation<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> Observation {
        let seg = match self.changepoint {
            Some(v) if t > v => &self.post,
            _ => &self.pre,
        };
        let n = match self.count_model {
            CountModel::Poisson => sample_poisson(self.rate, rng),
            CountModel::Fixed => self.rate.round() as u64,
        };
        match self.mode {
            SampleMode::Binned => Observation::Counts(multinomial_from_cdf(&seg.cdf, n, rng)),
            SampleMode::Raw => {
                let mixture = seg.analytic.as_ref().expect("validated raw scenario");
                let samples = (0..n).map(|_| mixture.sample(rng)).collect();
                Observation::Samples(RawSampleBatch::new(samples).expect("normal draws are finite"))
            }
        }
    }
}
