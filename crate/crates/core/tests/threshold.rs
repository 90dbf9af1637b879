//! Threshold search on the reference distributions.

use redundancy_core::threshold::{
    find_threshold, overhead_sweep, tail_improvement_check, variance_sweep, SearchControls,
};
use redundancy_core::{Family, ServiceDistribution};

fn controls() -> SearchControls {
    SearchControls::default()
}

#[test]
fn exponential_threshold_is_a_third() {
    let est = find_threshold(&ServiceDistribution::exponential(), 2, 20, 0.0, &controls()).unwrap();
    assert!((est.threshold - 1.0 / 3.0).abs() <= 0.01, "{est:?}");
    assert!(est.consistent);
}

#[test]
fn deterministic_threshold() {
    let est = find_threshold(&ServiceDistribution::deterministic(), 2, 20, 0.0, &controls()).unwrap();
    assert!((est.threshold - 0.258).abs() <= 0.01, "{est:?}");
}

#[test]
fn small_overhead_negates_deterministic_gains() {
    let est = find_threshold(&ServiceDistribution::deterministic(), 2, 20, 0.05, &controls()).unwrap();
    assert!(est.threshold < 0.02, "{est:?}");
}

#[test]
fn sweep_endpoints_match_named_laws() {
    let two = variance_sweep(Family::TwoPoint, &[0.0], 2, 20, &controls()).unwrap();
    assert!((two[0].estimate.threshold - 0.258).abs() <= 0.01);
    assert_eq!(two[0].variance, 0.0);
    let wei = variance_sweep(Family::Weibull, &[1.0], 2, 20, &controls()).unwrap();
    assert!((wei[0].estimate.threshold - 1.0 / 3.0).abs() <= 0.01);
}

#[test]
fn heavy_pareto_threshold_lies_between_a_third_and_a_half() {
    let sweep = variance_sweep(Family::Pareto, &[2.1], 2, 20, &controls()).unwrap();
    let t = sweep[0].estimate.threshold;
    assert!(t > 1.0 / 3.0 && t < 0.5, "{t}");
}

#[test]
fn threshold_does_not_grow_with_overhead() {
    let d = ServiceDistribution::exponential();
    let quick = SearchControls::quick();
    let mut prev = f64::INFINITY;
    for c in [0.0, 0.05, 0.2] {
        let est = find_threshold(&d, 2, 20, c, &quick).unwrap();
        assert!(est.threshold <= prev + est.half_width, "c {c}: {est:?}");
        prev = est.threshold;
    }
}

#[test]
fn deterministic_overhead_row_is_positive() {
    let loads = [0.02, 0.1, 0.2, 0.3];
    let cells = overhead_sweep(
        &ServiceDistribution::deterministic(),
        2,
        20,
        &[0.0, 0.05],
        &loads,
        &SearchControls::quick(),
    )
    .unwrap();
    assert_eq!(cells.len(), 8);
    assert!(cells[..4].iter().take(3).all(|c| c.delta_mean < 0.0));
    assert!(cells[3].delta_mean > 0.0);
    assert!(cells[4..].iter().all(|c| c.delta_mean > 0.0));
}

#[test]
fn replication_helps_the_whole_distribution_at_light_load() {
    let check = tail_improvement_check(
        &ServiceDistribution::exponential(),
        2,
        20,
        0.2,
        0.5,
        None,
        &SearchControls::quick(),
    )
    .unwrap();
    assert!(check.improved, "{check:?}");
    assert_eq!(check.levels.len(), 4);
}
