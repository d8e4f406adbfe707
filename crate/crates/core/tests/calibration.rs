// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo calibration checked against fresh null streams and the
//! closed-form bound.

use ksdetect::{
    calibrate_monte_carlo, count_crossings, null_statistics, threshold_from_bound, AlarmRule, Density, DetectorSpec,
    FalseAlarmBudget, Scenario, ThresholdMethod,
};

const HORIZON: u64 = 200;
const WINDOW: usize = 10;

fn scenario() -> Scenario {
    Scenario::null(Density::uniform(64).unwrap(), 200.0, HORIZON).unwrap()
}

#[test]
fn mc_threshold_holds_on_fresh_streams() {
    let s = scenario();
    let spec = DetectorSpec::Ks { window: WINDOW, buckets: None };
    let target = 1.0;
    let reps = 400;
    let cal = calibrate_monte_carlo(&s, std::slice::from_ref(&spec), HORIZON, target, reps, 11).unwrap();
    assert_eq!(cal[0].method, ThresholdMethod::MonteCarlo);

    let fresh = null_statistics(&s, &[spec], HORIZON, reps, 12).unwrap();
    let rate = count_crossings(&fresh[0], cal[0].threshold, AlarmRule::AtLeast) as f64 / reps as f64;
    assert!(
        (0.5 * target..=1.5 * target).contains(&rate),
        "fresh false-alarm rate {rate} outside target ±50% (c = {})",
        cal[0].threshold
    );
}

#[test]
fn mc_threshold_is_below_bound() {
    let s = scenario();
    for window in [1, 5, 10, 25] {
        let specs = [DetectorSpec::Ks { window, buckets: None }, DetectorSpec::KsBound { window, buckets: None }];
        let cal = calibrate_monte_carlo(&s, &specs, HORIZON, 1.0, 100, 5).unwrap();
        let bound = threshold_from_bound(&FalseAlarmBudget::new(HORIZON, window, 1.0).unwrap());
        assert_eq!(cal[1].method, ThresholdMethod::Bound);
        assert_eq!(cal[1].threshold, bound);
        assert!(cal[0].threshold <= bound, "L={window}: mc {} > bound {bound}", cal[0].threshold);
    }
}

#[test]
fn calibration_is_reproducible() {
    let s = scenario();
    let specs = [DetectorSpec::Ks { window: 5, buckets: None }, DetectorSpec::PooledKs];
    let a = calibrate_monte_carlo(&s, &specs, 100, 1.0, 20, 99).unwrap();
    let b = calibrate_monte_carlo(&s, &specs, 100, 1.0, 20, 99).unwrap();
    let c = calibrate_monte_carlo(&s, &specs, 100, 1.0, 20, 100).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn pooled_null_mean_grows_with_t() {
    let s = scenario();
    let reps = 200u64;
    let stats = null_statistics(&s, &[DetectorSpec::PooledKs], HORIZON, reps, 21).unwrap();
    let h = HORIZON as usize;
    let means: Vec<f64> =
        (0..h).map(|t| (0..reps as usize).map(|r| stats[0][r * h + t]).sum::<f64>() / reps as f64).collect();

    // Least-squares slope of the mean trajectory on t with its standard error.
    let n = h as f64;
    let tbar = (n + 1.0) / 2.0;
    let ybar = means.iter().sum::<f64>() / n;
    let sxx: f64 = (1..=h).map(|t| (t as f64 - tbar).powi(2)).sum();
    let sxy: f64 = means.iter().enumerate().map(|(i, y)| (i as f64 + 1.0 - tbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let rss: f64 = means.iter().enumerate().map(|(i, y)| (y - ybar - slope * (i as f64 + 1.0 - tbar)).powi(2)).sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    assert!(slope / se > 5.0, "slope {slope} not significantly positive (se {se})");
    // The square-root scaled statistic would stay near the Kolmogorov mean.
    assert!(means[h - 1] > 10.0 * 0.8687, "late mean {} too small", means[h - 1]);
}
