// SPDX-License-Identifier: MIT OR Apache-2.0

//! Stream-level properties of the detectors and the simulator.

use ksdetect::rng::{domain, substream};
use ksdetect::{
    gaussian_mixture_density, ks_distance, mix_densities, run_replicates, ChangepointPlan, CountVector, Density,
    DetectorConfig, DetectorSpec, KsDetector, MixtureComponent, Observation, PostAlarm, Scenario,
};

fn background() -> Density {
    let comps = [MixtureComponent::new(0.6, -2.0, 1.0), MixtureComponent::new(0.4, 2.5, 1.5)];
    gaussian_mixture_density(&comps, 128, -8.0, 8.0).unwrap()
}

fn counts(obs: Observation) -> CountVector {
    match obs {
        Observation::Counts(x) => x,
        Observation::Samples(_) => panic!("binned scenario produced samples"),
    }
}

#[test]
fn single_window_detector_is_per_step_statistic() {
    let f0 = background();
    let cdf = f0.cdf().unwrap();
    let s = Scenario::null(f0, 40.0, 300).unwrap();
    let gen = s.generator().unwrap();
    let mut rng = substream(1, domain::SCENARIO, 0);
    let mut det = KsDetector::new(cdf.clone(), DetectorConfig::new(1, f64::MAX)).unwrap();
    for t in 1..=300 {
        let x = counts(gen.observation(t, &mut rng));
        let o = det.step(x.clone()).unwrap();
        if x.total() == 0 {
            assert!(o.skipped);
        } else {
            assert_eq!(o.w_stat, ks_distance(&cdf, &x).unwrap(), "t={t}");
            assert_eq!(o.argmax_start, Some(t));
        }
    }
}

#[test]
fn window_statistic_dominates_newest_window() {
    let f0 = background();
    let cdf = f0.cdf().unwrap();
    let s = Scenario::null(f0, 5.0, 400).unwrap();
    let gen = s.generator().unwrap();
    let mut rng = substream(2, domain::SCENARIO, 0);
    let mut det = KsDetector::new(cdf.clone(), DetectorConfig::new(20, f64::MAX)).unwrap();
    for t in 1..=400 {
        let x = counts(gen.observation(t, &mut rng));
        let o = det.step(x.clone()).unwrap();
        if x.total() > 0 {
            assert!(o.w_stat >= ks_distance(&cdf, &x).unwrap(), "t={t}");
        }
    }
}

#[test]
fn scaling_a_window_scales_the_statistic() {
    let f0 = background();
    let cdf = f0.cdf().unwrap();
    let s = Scenario::null(f0, 300.0, 10).unwrap();
    let gen = s.generator().unwrap();
    let mut rng = substream(3, domain::SCENARIO, 0);
    for t in 1..=10 {
        let x = counts(gen.observation(t, &mut rng));
        let base = ks_distance(&cdf, &x).unwrap();
        for m in [2u64, 3, 7, 100] {
            let scaled = ks_distance(&cdf, &x.scaled(m)).unwrap();
            assert!((scaled - (m as f64).sqrt() * base).abs() <= 1e-12 * scaled.max(1.0), "m={m}");
        }
    }
}

#[test]
fn pre_change_data_do_not_depend_on_changepoint() {
    let f0 = background();
    let anomaly = gaussian_mixture_density(&[MixtureComponent::new(1.0, 0.5, 0.2)], 128, -8.0, 8.0).unwrap();
    let post = mix_densities(&f0, &anomaly, 0.7).unwrap();
    let s = Scenario::new(f0, post, 50.0, 200).unwrap();
    let mut early = s.generator().unwrap();
    early.set_changepoint(Some(60));
    let mut late = s.generator().unwrap();
    late.set_changepoint(Some(150));
    let mut ra = substream(4, domain::SCENARIO, 9);
    let mut rb = substream(4, domain::SCENARIO, 9);
    for t in 1..=60 {
        assert_eq!(early.observation(t, &mut ra), late.observation(t, &mut rb), "t={t}");
    }
    let after: Vec<_> = (61..=150).map(|t| early.observation(t, &mut ra)).collect();
    let before: Vec<_> = (61..=150).map(|t| late.observation(t, &mut rb)).collect();
    assert_ne!(after, before);
}

#[test]
fn pre_change_bin_frequencies_match_between_changepoints() {
    // Pool the pre-change steps of two changepoint plans and compare the
    // per-bin totals with a chi-square homogeneity statistic.
    let f0 = Density::uniform(16).unwrap();
    let anomaly = gaussian_mixture_density(&[MixtureComponent::new(1.0, 0.0, 0.5)], 16, -8.0, 8.0).unwrap();
    let post = mix_densities(&f0, &anomaly, 0.5).unwrap();
    let s = Scenario::new(f0, post, 30.0, 120).unwrap();
    let pooled = |v: u64, seed: u64| {
        let mut gen = s.generator().unwrap();
        gen.set_changepoint(Some(v));
        let mut acc = vec![0u64; 16];
        for r in 0..200 {
            let mut rng = substream(seed, domain::SCENARIO, r);
            for t in 1..=40 {
                for (a, c) in acc.iter_mut().zip(counts(gen.observation(t, &mut rng)).counts()) {
                    *a += c;
                }
            }
        }
        acc
    };
    let a = pooled(40, 5);
    let b = pooled(100, 6);
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let chi2: f64 = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| {
            let col = (x + y) as f64;
            let (ea, eb) = (col * na / (na + nb), col * nb / (na + nb));
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    // 15 degrees of freedom; 30.58 is the 0.01 upper quantile.
    assert!(chi2 < 30.58, "chi-square {chi2}");
}

#[test]
fn benchmark_with_unit_window_matches_per_step_rule() {
    let f0 = background();
    let anomaly = gaussian_mixture_density(&[MixtureComponent::new(1.0, 0.5, 0.3)], 128, -8.0, 8.0).unwrap();
    let post = mix_densities(&f0, &anomaly, 0.8).unwrap();
    let s = Scenario::new(f0.clone(), post, 200.0, 150).unwrap();
    let c = 1.8;
    let plan = ChangepointPlan::Uniform { min: 20, max: 80 };
    let records = run_replicates(&s, &[(DetectorSpec::Ks { window: 1, buckets: None }, c)], plan, 30, 8).unwrap();

    // Replay each replicate's stream with the single-step statistic.
    let cdf = f0.cdf().unwrap();
    for rec in &records {
        let mut rng = substream(8, domain::BENCHMARK, rec.replicate);
        let v = {
            use rand::Rng;
            rng.random_range(20..=80u64)
        };
        assert_eq!(Some(v), rec.changepoint);
        let mut gen = s.generator().unwrap();
        gen.set_changepoint(Some(v));
        let mut first = None;
        for t in 1..=s.horizon {
            let x = counts(gen.observation(t, &mut rng));
            if t > v && x.total() > 0 && ks_distance(&cdf, &x).unwrap() >= c {
                first = Some(t);
                break;
            }
        }
        assert_eq!(rec.alarm_time, first, "replicate {}", rec.replicate);
    }
}

#[test]
fn continue_mode_keeps_alarming_without_reset() {
    let cdf = Density::uniform(4).unwrap().cdf().unwrap();
    let cfg = DetectorConfig { window: 3, threshold: 2.0, post_alarm: PostAlarm::Continue };
    let mut det = KsDetector::new(cdf, cfg).unwrap();
    let hits: Vec<bool> = (0..5).map(|_| det.step(CountVector::new(vec![40, 0, 0, 0])).unwrap().alarm).collect();
    assert_eq!(hits, vec![true; 5]);
    assert_eq!(det.state().len(), 3);
}
