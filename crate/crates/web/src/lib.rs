// SPDX-License-Identifier: MIT OR Apache-2.0

//! Browser demo: simulate a count stream with a change, trace `W_t` against
//! its threshold, and plot the power lower bound.

use wasm_bindgen::prelude::*;

use ksdetect::rng::{domain, substream};
use ksdetect::{
    gaussian_mixture_density, mix_densities, power_lower_bound, threshold_from_bound, tv_distance, CountsDistribution,
    Density, DetectorConfig, FalseAlarmBudget, KsDetector, MixtureComponent, Observation, Scenario,
};

/// Channel count of the demo spectrum.
pub const BINS: usize = 256;

const SUPPORT: (f64, f64) = (-8.0, 8.0);

fn background() -> ksdetect::Result<Density> {
    let comps = [
        MixtureComponent::new(0.3, -4.0, 1.0),
        MixtureComponent::new(0.3, -1.0, 1.2),
        MixtureComponent::new(0.2, 2.0, 0.8),
        MixtureComponent::new(0.2, 5.0, 1.5),
    ];
    gaussian_mixture_density(&comps, BINS, SUPPORT.0, SUPPORT.1)
}

fn anomaly() -> ksdetect::Result<Density> {
    gaussian_mixture_density(&[MixtureComponent::new(1.0, 0.5, 0.3)], BINS, SUPPORT.0, SUPPORT.1)
}

/// Inputs of one simulated stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub seed: u32,
    pub window: usize,
    /// Mean counts per step.
    pub rate: f64,
    /// Share of post-change counts coming from the anomaly peak.
    pub anomaly_share: f64,
    /// Last pre-change step.
    pub changepoint: u32,
    pub horizon: u32,
    /// Expected false alarms per horizon for the bound threshold.
    pub alpha: f64,
}

/// `W_t` over one stream with the bound threshold and the first alarm.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    stats: Vec<f64>,
    threshold: f64,
    alarm: Option<u32>,
    changepoint: u32,
    tv: f64,
}

#[wasm_bindgen]
impl Trajectory {
    /// `W_t` for `t = 1..=horizon`; skipped steps are 0.
    #[wasm_bindgen(getter)]
    pub fn stats(&self) -> Vec<f64> {
        self.stats.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// First alarm after the changepoint, if any.
    #[wasm_bindgen(getter, js_name = alarmTime)]
    pub fn alarm_time(&self) -> Option<u32> {
        self.alarm
    }

    #[wasm_bindgen(getter)]
    pub fn changepoint(&self) -> u32 {
        self.changepoint
    }

    /// `max_j |F⁰(j) − F_c(j)|` between the pre- and post-change spectra.
    #[wasm_bindgen(getter)]
    pub fn tv(&self) -> f64 {
        self.tv
    }
}

/// Simulates one stream and runs the windowed KS detector over it.
pub fn run_demo(p: DemoParams) -> ksdetect::Result<Trajectory> {
    let f0 = background()?;
    let post = mix_densities(&f0, &anomaly()?, 1.0 - p.anomaly_share)?;
    let cdf0 = f0.cdf()?;
    let tv = tv_distance(&cdf0, &post.cdf()?)?;
    let threshold = threshold_from_bound(&FalseAlarmBudget::new(p.horizon.into(), p.window, p.alpha)?);
    let scenario = Scenario::new(f0, post, p.rate, p.horizon.into())?.with_changepoint(Some(p.changepoint.into()))?;
    let gen = scenario.generator()?;
    let mut rng = substream(p.seed.into(), domain::DEMO, 0);
    let mut det = KsDetector::new(cdf0, DetectorConfig::new(p.window, threshold))?;
    let mut stats = Vec::with_capacity(p.horizon as usize);
    let mut alarm = None;
    for t in 1..=u64::from(p.horizon) {
        let Observation::Counts(x) = gen.observation(t, &mut rng) else {
            unreachable!("binned scenario");
        };
        let o = det.step(x)?;
        stats.push(o.w_stat);
        if o.alarm && t > p.changepoint.into() && alarm.is_none() {
            alarm = Some(t as u32);
        }
    }
    Ok(Trajectory { stats, threshold, alarm, changepoint: p.changepoint, tv })
}

/// Lower bound on detection power over a grid of `points` distances in
/// `(0, 1]`, for windows of `window` steps at `rate` counts per step.
pub fn power_points(threshold: f64, rate: f64, window: usize, points: usize) -> ksdetect::Result<Vec<f64>> {
    let counts = CountsDistribution::poisson_window(rate, window as u64);
    (1..=points)
        .map(|i| {
            let d = i as f64 / points as f64;
            power_lower_bound(threshold, d, counts).map(|p| p.power_bound_clamped)
        })
        .collect()
}

fn js_err(e: ksdetect::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn simulate(
    seed: u32,
    window: usize,
    rate: f64,
    anomaly_share: f64,
    changepoint: u32,
    horizon: u32,
    alpha: f64,
) -> Result<Trajectory, JsError> {
    run_demo(DemoParams { seed, window, rate, anomaly_share, changepoint, horizon, alpha }).map_err(js_err)
}

/// Closed-form threshold for `horizon`, `window` and `alpha`.
#[wasm_bindgen(js_name = boundThreshold)]
pub fn bound_threshold(horizon: u32, window: usize, alpha: f64) -> Result<f64, JsError> {
    let budget = FalseAlarmBudget::new(horizon.into(), window, alpha).map_err(js_err)?;
    Ok(threshold_from_bound(&budget))
}

#[wasm_bindgen(js_name = powerCurve)]
pub fn power_curve(threshold: f64, rate: f64, window: usize, points: usize) -> Result<Vec<f64>, JsError> {
    power_points(threshold, rate, window, points).map_err(js_err)
}
