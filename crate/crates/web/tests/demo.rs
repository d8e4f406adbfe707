// SPDX-License-Identifier: MIT OR Apache-2.0

use ksdetect_web::{power_points, run_demo, DemoParams};

fn params() -> DemoParams {
    DemoParams { seed: 7, window: 20, rate: 500.0, anomaly_share: 0.1, changepoint: 150, horizon: 300, alpha: 1.0 }
}

#[test]
fn demo_run_is_reproducible_and_detects() {
    let a = run_demo(params()).unwrap();
    let b = run_demo(params()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.stats().len(), 300);
    assert!((a.threshold() - (f64::ln(2.0 * 300.0 * 20.0) / 2.0).sqrt()).abs() < 1e-12);
    let alarm = a.alarm_time().expect("a 10% peak at 500 counts per step is detected");
    assert!(alarm > 150 && alarm <= 180, "alarm at {alarm}");
    assert!(a.tv() > 0.0 && a.tv() <= 0.1 + 1e-12);
    let c = run_demo(DemoParams { seed: 8, ..params() }).unwrap();
    assert_ne!(a.stats(), c.stats());
}

#[test]
fn no_anomaly_means_no_distance() {
    let t = run_demo(DemoParams { anomaly_share: 0.0, ..params() }).unwrap();
    assert_eq!(t.tv(), 0.0);
}

#[test]
fn invalid_inputs_are_errors() {
    assert!(run_demo(DemoParams { changepoint: 300, ..params() }).is_err());
    assert!(run_demo(DemoParams { window: 0, ..params() }).is_err());
    assert!(run_demo(DemoParams { anomaly_share: 1.5, ..params() }).is_err());
}

#[test]
fn power_curve_rises_with_distance() {
    let p = power_points(2.4, 100.0, 50, 50).unwrap();
    assert_eq!(p.len(), 50);
    assert!(p.windows(2).all(|w| w[0] <= w[1]));
    assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    assert!(p[49] > 0.98);
    assert!(power_points(0.0, 100.0, 50, 10).is_err());
}
