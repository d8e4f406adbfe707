// SPDX-License-Identifier: MIT OR Apache-2.0

//! Kolmogorov–Smirnov statistics on binned spectra and raw samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CDF_END_TOLERANCE: f64 = 1e-12;
const SERIES_TOLERANCE: f64 = 1e-12;

/// Discrete reference CDF `F⁰(1..D)` over `D` channels.
///
/// Channel `j` covers the energy interval whose right endpoint is `ξ_j = j/D`
/// once the sample space is mapped onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCdf {
    values: Vec<f64>,
}

impl SpectrumCdf {
    /// Wraps cumulative values, checking that they form a valid CDF.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("a spectrum needs at least one bin"));
        }
        let mut prev = 0.0;
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("cdf value {v} at bin {} is not a probability", j + 1)));
            }
            if v < prev {
                return Err(Error::domain(format!("cdf decreases at bin {}", j + 1)));
            }
            prev = v;
        }
        let last = values[values.len() - 1];
        if (last - 1.0).abs() > CDF_END_TOLERANCE {
            return Err(Error::domain(format!("cdf must end at 1, ends at {last}")));
        }
        Ok(Self { values })
    }

    /// Builds the CDF from non-negative per-bin weights (probabilities or
    /// counts); weights are normalised by their total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("a spectrum needs at least one bin"));
        }
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!("weight {w} at bin {} is negative or not finite", j + 1)));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("weights sum to zero"));
        }
        let mut acc = 0.0;
        let mut values: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                (acc / total).min(1.0)
            })
            .collect();
        *values.last_mut().expect("non-empty") = 1.0;
        Ok(Self { values })
    }

    pub fn bin_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Per-bin probabilities `w⁽⁰⁾`.
    pub fn weights(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&v| {
                let w = v - prev;
                prev = v;
                w
            })
            .collect()
    }

    /// Right endpoints `ξ_j = j/D` of the channels on the unit interval.
    pub fn right_edges(&self) -> Vec<f64> {
        let d = self.values.len() as f64;
        (1..=self.values.len()).map(|j| j as f64 / d).collect()
    }
}

/// Binned photon counts for one time step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn zeros(bins: usize) -> Self {
        Self { counts: vec![0; bins], total: 0 }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self::new(self.counts.iter().map(|c| c * factor).collect())
    }
}

/// Raw energies `y_{t,1..N_t}` observed in one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSampleBatch {
    samples: Vec<f64>,
}

impl RawSampleBatch {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|y| !y.is_finite()) {
            return Err(Error::domain("raw samples must be finite"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.samples.is_empty() {
            None
        } else {
            Some(self.samples.iter().sum::<f64>() / self.samples.len() as f64)
        }
    }
}

/// Largest gap `max_j |F⁰(j) − F̂(j)|` for counts totalling `total > 0`,
/// with the first bin attaining it (0-based).
///
/// Cumulative frequencies come from one integer prefix sum divided by the
/// total, so any two callers holding the same integer counts get bit-identical
/// results.
#[inline]
pub(crate) fn max_cdf_gap(cdf0: &[f64], counts: &[u64], total: u64) -> (f64, usize) {
    debug_assert!(total > 0);
    let n = total as f64;
    let mut cum = 0u64;
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (j, (&f0, &c)) in cdf0.iter().zip(counts).enumerate() {
        cum += c;
        let gap = (f0 - cum as f64 / n).abs();
        if gap > best {
            best = gap;
            arg = j;
        }
    }
    (best, arg)
}

/// Single-window statistic `Δ = √N · max_j |F⁰(j) − F̂(j)|`.
pub fn ks_distance(cdf0: &SpectrumCdf, agg: &CountVector) -> Result<f64> {
    if agg.bin_count() != cdf0.bin_count() {
        return Err(Error::DimensionMismatch { expected: cdf0.bin_count(), found: agg.bin_count() });
    }
    if agg.total() == 0 {
        return Err(Error::EmptyWindow);
    }
    let (gap, _) = max_cdf_gap(cdf0.values(), agg.counts(), agg.total());
    Ok((agg.total() as f64).sqrt() * gap)
}

/// One-sided gaps at the `rank`-th order statistic (1-based) of `n` samples
/// whose reference CDF value is `u`.
#[inline]
pub(crate) fn order_statistic_gap(rank: usize, n: f64, u: f64) -> f64 {
    (rank as f64 / n - u).max(u - (rank - 1) as f64 / n)
}

/// Continuous-sample statistic `√N · sup_y |F₀(y) − F̂(y)|`.
///
/// Evaluated exactly at the jump points of the empirical CDF, which assumes
/// `cdf0` is continuous.
pub fn ks_distance_raw<F: Fn(f64) -> f64>(cdf0: F, agg: &RawSampleBatch) -> Result<f64> {
    if agg.count() == 0 {
        return Err(Error::EmptyWindow);
    }
    let mut u: Vec<f64> = agg.samples().iter().map(|&y| cdf0(y)).collect();
    u.sort_unstable_by(f64::total_cmp);
    let n = u.len() as f64;
    let sup = u.iter().enumerate().map(|(i, &ui)| order_statistic_gap(i + 1, n, ui)).fold(0.0, f64::max);
    Ok(n.sqrt() * sup)
}

/// Limiting Kolmogorov distribution `K(x) = 1 − 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²x²}`.
///
/// Below `x = 1` the equivalent theta-function form
/// `√(2π)/x Σ_{k≥1} e^{−(2k−1)²π²/(8x²)}` is summed instead; it converges in a
/// handful of terms where the alternating series needs hundreds.
pub fn kolmogorov_cdf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("kolmogorov_cdf needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < 1.0 {
        let scale = (2.0 * std::f64::consts::PI).sqrt() / x;
        let a = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut sum = 0.0;
        for k in 1.. {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * a).exp();
            sum += term;
            if term * scale < SERIES_TOLERANCE {
                break;
            }
        }
        return Ok((scale * sum).clamp(0.0, 1.0));
    }
    Ok((1.0 - kolmogorov_tail_series(x)).clamp(0.0, 1.0))
}

/// `1 − K(x)`, summed directly so that far-tail p-values keep their precision.
pub fn kolmogorov_survival(x: f64) -> Result<f64> {
    if x < 1.0 {
        return kolmogorov_cdf(x).map(|k| 1.0 - k);
    }
    Ok(kolmogorov_tail_series(x).clamp(0.0, 1.0))
}

fn kolmogorov_tail_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1.. {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += sign * term;
        if term < SERIES_TOLERANCE {
            break;
        }
        sign = -sign;
    }
    2.0 * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform4() -> SpectrumCdf {
        SpectrumCdf::new(vec![0.25, 0.5, 0.75, 1.0]).unwrap()
    }

    #[test]
    fn empirical_equal_to_null_is_zero() {
        let cdf = SpectrumCdf::new(vec![0.5, 1.0]).unwrap();
        assert_eq!(ks_distance(&cdf, &CountVector::new(vec![50, 50])).unwrap(), 0.0);
        assert_eq!(ks_distance(&uniform4(), &CountVector::new(vec![1, 1, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn all_mass_in_first_bin() {
        // Gaps per bin: |0.25-1|, |0.5-1|, |0.75-1|, 0 -> max 0.75, times sqrt(4).
        let d = ks_distance(&uniform4(), &CountVector::new(vec![4, 0, 0, 0])).unwrap();
        assert_eq!(d, 1.5);
    }

    #[test]
    fn dimension_and_empty_errors() {
        let cdf = uniform4();
        assert_eq!(
            ks_distance(&cdf, &CountVector::new(vec![1, 2])),
            Err(Error::DimensionMismatch { expected: 4, found: 2 })
        );
        assert_eq!(ks_distance(&cdf, &CountVector::zeros(4)), Err(Error::EmptyWindow));
    }

    #[test]
    fn cdf_validation() {
        assert!(SpectrumCdf::new(vec![0.5, 0.4, 1.0]).is_err());
        assert!(SpectrumCdf::new(vec![0.5, 0.9]).is_err());
        assert!(SpectrumCdf::new(vec![-0.1, 1.0]).is_err());
        assert!(SpectrumCdf::new(vec![]).is_err());
        assert!(SpectrumCdf::new(vec![0.5, 1.0 + 1e-13]).is_ok());
        let cdf = SpectrumCdf::from_weights(&[50.0, 50.0]).unwrap();
        assert_eq!(cdf.values(), &[0.5, 1.0]);
        assert!(SpectrumCdf::from_weights(&[0.0, 0.0]).is_err());
        assert!(SpectrumCdf::from_weights(&[1.0, -1.0]).is_err());
        assert_eq!(uniform4().right_edges(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(uniform4().weights(), vec![0.25; 4]);
    }

    #[test]
    fn raw_single_sample_at_median() {
        let batch = RawSampleBatch::new(vec![0.5]).unwrap();
        let d = ks_distance_raw(|y: f64| y.clamp(0.0, 1.0), &batch).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn raw_step_cdf_equal_to_samples() {
        // F0 is the empirical CDF itself; jump-point evaluation sees a 1/N gap.
        let samples = vec![0.1, 0.4, 0.45, 0.8, 0.9];
        let sorted = samples.clone();
        let n = samples.len() as f64;
        let step = move |y: f64| sorted.iter().filter(|&&s| s <= y).count() as f64 / n;
        let d = ks_distance_raw(step, &RawSampleBatch::new(samples).unwrap()).unwrap();
        assert_abs_diff_eq!(d, n.sqrt() / n, epsilon = 1e-15);
    }

    #[test]
    fn raw_matches_dense_grid_sup() {
        // Quantile-spaced samples under a logistic CDF; the grid includes
        // points just left of every sample to capture left limits.
        let cdf = |y: f64| 1.0 / (1.0 + (-y).exp());
        let n = 40usize;
        let samples: Vec<f64> = (1..=n)
            .map(|i| {
                let p = i as f64 / (n + 1) as f64 + 0.003 * ((i * 7) % 5) as f64;
                (p / (1.0 - p)).ln()
            })
            .collect();
        let batch = RawSampleBatch::new(samples.clone()).unwrap();
        let exact = ks_distance_raw(cdf, &batch).unwrap();

        let mut sorted = samples;
        sorted.sort_by(f64::total_cmp);
        let ecdf = |y: f64| sorted.iter().filter(|&&s| s <= y).count() as f64 / n as f64;
        let mut grid: Vec<f64> = (0..=200_000).map(|k| -8.0 + 16.0 * k as f64 / 200_000.0).collect();
        for &s in &sorted {
            grid.push(s);
            grid.push(s - 1e-13);
        }
        let sup = grid.iter().map(|&y| (cdf(y) - ecdf(y)).abs()).fold(0.0, f64::max);
        assert_abs_diff_eq!(exact, (n as f64).sqrt() * sup, epsilon = 1e-9);
        assert!(exact < 1.0);
    }

    #[test]
    fn raw_empty_batch_is_error() {
        let batch = RawSampleBatch::new(vec![]).unwrap();
        assert_eq!(ks_distance_raw(|y| y, &batch), Err(Error::EmptyWindow));
        assert!(RawSampleBatch::new(vec![f64::NAN]).is_err());
    }

    fn kolmogorov_oracle(x: f64) -> f64 {
        // Alternating series with a fixed, generous term count.
        let s: f64 = (1..=2000)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * x * x).exp()
            })
            .sum();
        1.0 - 2.0 * s
    }

    #[test]
    fn kolmogorov_cdf_values() {
        assert_eq!(kolmogorov_cdf(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(kolmogorov_cdf(10.0).unwrap(), 1.0, epsilon = 1e-12);
        let k = kolmogorov_cdf(1.3581).unwrap();
        assert_abs_diff_eq!(k, kolmogorov_oracle(1.3581), epsilon = 1e-12);
        assert_abs_diff_eq!(k, 0.95, epsilon = 1e-4);
        assert!(kolmogorov_cdf(-0.1).is_err());
        assert!(kolmogorov_cdf(f64::NAN).is_err());
    }

    #[test]
    fn kolmogorov_forms_agree() {
        for i in 1..400 {
            let x = 0.25 + i as f64 * 0.01;
            assert_abs_diff_eq!(kolmogorov_cdf(x).unwrap(), kolmogorov_oracle(x), epsilon = 1e-11);
        }
        assert_abs_diff_eq!(kolmogorov_survival(2.0).unwrap(), 1.0 - kolmogorov_oracle(2.0), epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_cdf_monotone() {
        let mut prev = 0.0;
        for i in 0..=3000 {
            let k = kolmogorov_cdf(i as f64 * 0.002).unwrap();
            assert!(k >= prev, "not monotone at {}", i);
            prev = k;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scaling_counts_scales_statistic(
                weights in prop::collection::vec(0.01f64..1.0, 2..40),
                counts in prop::collection::vec(0u64..30, 2..40),
                m in 1u64..50,
            ) {
                let d = weights.len().min(counts.len());
                let cdf = SpectrumCdf::from_weights(&weights[..d]).unwrap();
                let x = CountVector::new(counts[..d].to_vec());
                prop_assume!(x.total() > 0);
                let base = ks_distance(&cdf, &x).unwrap();
                let scaled = ks_distance(&cdf, &x.scaled(m)).unwrap();
                prop_assert!((scaled - (m as f64).sqrt() * base).abs() <= 1e-12 * (1.0 + scaled));
            }

            #[test]
            fn statistic_bounded_by_sqrt_total(
                counts in prop::collection::vec(0u64..30, 1..40),
            ) {
                let d = counts.len();
                let cdf = SpectrumCdf::from_weights(&vec![1.0; d]).unwrap();
                let x = CountVector::new(counts);
                prop_assume!(x.total() > 0);
                let s = ks_distance(&cdf, &x).unwrap();
                prop_assert!(s >= 0.0 && s <= (x.total() as f64).sqrt());
            }
        }
    }
}
