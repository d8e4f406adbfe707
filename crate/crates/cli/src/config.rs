// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ksdetect::{
    gaussian_mixture_density, mix_densities, ChangepointPlan, CountModel, Density, DetectorSpec, MixtureComponent,
    SampleMode, Scenario, SourceSpec,
};

use crate::spectrum::ingest_spectrum;
use crate::ConfigError;

/// A complete experiment: one scenario, a detector line-up, how to
/// calibrate them, and how many replicates to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    /// CSV results path; relative paths resolve against the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    pub detectors: Vec<DetectorSpec>,
    pub calibration: CalibrationConfig,
}

fn default_replicates() -> u64 {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    /// Channel count for generated densities; spectrum files carry their own.
    #[serde(default)]
    pub bins: Option<usize>,
    /// Mean events per step.
    pub rate: f64,
    pub horizon: u64,
    #[serde(default)]
    pub mode: SampleMode,
    #[serde(default)]
    pub count_model: CountModel,
    #[serde(default)]
    pub changepoint: ChangepointPlan,
    pub pre: DensityConfig,
    /// Defaults to the pre-change density (a no-change control run).
    #[serde(default)]
    pub post: Option<DensityConfig>,
}

fn default_support() -> (f64, f64) {
    (-8.0, 8.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityConfig {
    Uniform,
    /// Normal mixture binned over `support`.
    Mixture {
        components: Vec<MixtureComponent>,
        #[serde(default = "default_support")]
        support: (f64, f64),
    },
    /// Spectrum CSV file (`bin,weight` or `bin,count`).
    Spectrum {
        path: PathBuf,
        #[serde(default)]
        winsorize_at: Option<usize>,
    },
    /// `w·f₀ + (1 − w)·f_A` with a fixed background weight.
    Blend {
        weight: f64,
        anomaly: Box<DensityConfig>,
    },
    /// Point source on top of the pre-change background; the mixing weight
    /// follows from the source's count rate.
    Source {
        strength_mci: f64,
        distance_m: f64,
        /// Background counts per step; defaults to the scenario rate.
        #[serde(default)]
        background_rate: Option<f64>,
        anomaly: Box<DensityConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMethod {
    Bound,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub method: CalibrationMethod,
    /// Horizon `T` over which false alarms are budgeted.
    pub horizon: u64,
    /// Tolerated false alarms per horizon.
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_cal_reps")]
    pub reps: u64,
    /// Defaults to the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_target() -> f64 {
    1.0
}

fn default_cal_reps() -> u64 {
    100
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves relative file paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let Some(out) = &mut self.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        self.scenario.pre.rebase(base);
        if let Some(post) = &mut self.scenario.post {
            post.rebase(base);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.replicates == 0 {
            return Err(ConfigError::field("replicates", "must be at least 1"));
        }
        if self.detectors.is_empty() {
            return Err(ConfigError::field("detectors", "at least one detector is required"));
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if d.window() == Some(0) {
                return Err(ConfigError::field(&format!("detectors[{i}].window"), "must be at least 1"));
            }
            if self.detectors[..i].iter().any(|e| e.id() == d.id()) {
                return Err(ConfigError::field(&format!("detectors[{i}]"), &format!("duplicate detector {}", d.id())));
            }
        }
        let cal = &self.calibration;
        if !(cal.target > 0.0) {
            return Err(ConfigError::field("calibration.target", "must be positive"));
        }
        if cal.reps == 0 {
            return Err(ConfigError::field("calibration.reps", "must be at least 1"));
        }
        if cal.horizon == 0 {
            return Err(ConfigError::field("calibration.horizon", "must be at least 1"));
        }
        if cal.method == CalibrationMethod::Bound {
            if let Some(d) = self.detectors.iter().find(|d| d.window().is_none()) {
                return Err(ConfigError::field(
                    "calibration.method",
                    &format!("bound calibration needs windowed detectors, {} has no window", d.id()),
                ));
            }
        }
        if !(self.scenario.rate > 0.0) {
            return Err(ConfigError::field("scenario.rate", "must be positive"));
        }
        if self.scenario.horizon == 0 {
            return Err(ConfigError::field("scenario.horizon", "must be at least 1"));
        }
        self.scenario
            .changepoint
            .validate(self.scenario.horizon)
            .map_err(|e| ConfigError::field("scenario.changepoint", &e.to_string()))?;
        Ok(())
    }

    pub fn calibration_seed(&self) -> u64 {
        self.calibration.seed.unwrap_or(self.seed)
    }
}

impl DensityConfig {
    fn rebase(&mut self, base: &Path) {
        match self {
            DensityConfig::Spectrum { path, .. } if path.is_relative() => *path = base.join(&*path),
            DensityConfig::Blend { anomaly, .. } | DensityConfig::Source { anomaly, .. } => anomaly.rebase(base),
            _ => {}
        }
    }

    /// Builds the density. `background` is the pre-change density, needed by
    /// the blend and source forms.
    pub fn resolve(
        &self,
        field: &str,
        bins: Option<usize>,
        rate: f64,
        background: Option<&Density>,
    ) -> Result<Density, ConfigError> {
        let err = |e: &dyn std::fmt::Display| ConfigError::field(field, &e.to_string());
        let need_bins = || {
            bins.or(background.map(Density::bin_count))
                .ok_or_else(|| ConfigError::field("scenario.bins", "required for generated densities"))
        };
        match self {
            DensityConfig::Uniform => Density::uniform(need_bins()?).map_err(|e| err(&e)),
            DensityConfig::Mixture { components, support } => {
                gaussian_mixture_density(components, need_bins()?, support.0, support.1).map_err(|e| err(&e))
            }
            DensityConfig::Spectrum { path, winsorize_at } => {
                let (_, density) = ingest_spectrum(path, *winsorize_at).map_err(|e| err(&e))?;
                Ok(density)
            }
            DensityConfig::Blend { weight, anomaly } => {
                let f0 = background.ok_or_else(|| ConfigError::field(field, "blend is only valid for post"))?;
                let fa = anomaly.resolve(&format!("{field}.anomaly"), bins, rate, None)?;
                mix_densities(f0, &fa, *weight).map_err(|e| err(&e))
            }
            DensityConfig::Source { strength_mci, distance_m, background_rate, anomaly } => {
                let f0 = background.ok_or_else(|| ConfigError::field(field, "source is only valid for post"))?;
                let fa = anomaly.resolve(&format!("{field}.anomaly"), bins.or(Some(f0.bin_count())), rate, None)?;
                let spec = SourceSpec {
                    strength_mci: *strength_mci,
                    distance_m: *distance_m,
                    background_rate: background_rate.unwrap_or(rate),
                    anomaly: fa,
                };
                spec.post_change(f0).map_err(|e| err(&e))
            }
        }
    }
}

impl ScenarioConfig {
    /// Resolves densities; the changepoint is left to the replicate plan.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let pre = self.pre.resolve("scenario.pre", self.bins, self.rate, None)?;
        let post = match &self.post {
            Some(p) => p.resolve("scenario.post", self.bins, self.rate, Some(&pre))?,
            None => pre.clone(),
        };
        let s = Scenario {
            pre,
            post,
            changepoint: None,
            rate: self.rate,
            horizon: self.horizon,
            mode: self.mode,
            count_model: self.count_model,
        };
        s.validate().map_err(|e| ConfigError::field("scenario", &e.to_string()))?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3

[scenario]
id = "demo"
bins = 8
rate = 100.0
horizon = 50
changepoint = { kind = "fixed", at = 20 }
pre = { kind = "uniform" }
post = { kind = "blend", weight = 0.5, anomaly = { kind = "mixture", components = [{ weight = 1.0, mean = 2.0, sd = 0.5 }] } }

[[detectors]]
kind = "ks"
window = 5

[[detectors]]
kind = "pooled-ks"

[calibration]
method = "monte-carlo"
horizon = 50
reps = 4
"#;

    #[test]
    fn parses_and_builds() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.replicates, 100);
        assert_eq!(cfg.calibration.target, 1.0);
        let s = cfg.scenario.build().unwrap();
        assert_eq!(s.pre.bin_count(), 8);
        assert_ne!(s.pre, s.post);
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.calibration.target = 0.0;
        let e = cfg.validate().unwrap_err();
        assert!(e.to_string().contains("calibration.target"), "{e}");
        let mut cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.calibration.method = CalibrationMethod::Bound;
        assert!(cfg.validate().unwrap_err().to_string().contains("calibration.method"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("seed = 3", "seed = 3\nsed = 4");
        assert!(toml::from_str::<ExperimentConfig>(&text).is_err());
    }
}
