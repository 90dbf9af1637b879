use std::collections::BTreeMap;
use std::time::Duration;

use proptest::prelude::*;
use redundancy_dns::campaign::strategies;
use redundancy_dns::{
    analyze, rank_resolvers, run_campaign, AnalyzeConfig, CampaignConfig, DelayLaw, Prober,
    SimulatedProber, Strategy, TrialRecord, VirtualResolver, LOSS_MS,
};

fn names() -> Vec<String> {
    (0..20).map(|i| format!("host{i}.example")).collect()
}

fn exp(mean: f64) -> VirtualResolver {
    VirtualResolver {
        delay: DelayLaw::Exponential { mean },
        drop_probability: 0.0,
    }
}

fn record(strategy: Strategy, latency_ms: f64) -> TrialRecord {
    TrialRecord {
        timestamp_ms: 0,
        name: "x.example".into(),
        strategy,
        latency_ms,
        lost: latency_ms >= LOSS_MS,
        targets: vec![],
        per_resolver: vec![],
    }
}

#[test]
fn strategy_choice_is_uniform() {
    let resolvers: Vec<_> = (0..10).map(|i| exp(20.0 + i as f64)).collect();
    let mut p = SimulatedProber::new(resolvers, 2000.0, 8).unwrap();
    let order: Vec<usize> = (0..10).collect();
    let cfg = CampaignConfig::new(10_000, 21);
    let log = run_campaign(&mut p, &order, &names(), &cfg).unwrap();
    let mut counts: BTreeMap<Strategy, usize> = BTreeMap::new();
    for t in &log {
        *counts.entry(t.strategy).or_default() += 1;
    }
    assert_eq!(counts.len(), 20);
    assert_eq!(counts.keys().copied().collect::<Vec<_>>(), {
        let mut s = strategies(10);
        s.sort();
        s
    });
    let expected = 10_000.0 / 20.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 99.9% point of chi-square with 19 degrees of freedom.
    assert!(chi2 < 43.82, "chi2 = {chi2}");
}

#[test]
fn parallel_uses_top_of_ranking() {
    let mut p = SimulatedProber::new(vec![exp(90.0), exp(10.0), exp(40.0)], 2000.0, 2).unwrap();
    let cfg = CampaignConfig::new(300, 5).with_gap(Duration::ZERO);
    let rank = rank_resolvers(&mut p, &names(), &cfg).unwrap();
    assert_eq!(rank.order, vec![1, 2, 0]);
    let log = run_campaign(&mut p, &rank.order, &names(), &CampaignConfig::new(300, 6)).unwrap();
    for t in log {
        if let Strategy::Parallel(m) = t.strategy {
            assert_eq!(t.targets, rank.order[..m]);
        }
    }
}

#[test]
fn reduction_factors_on_fixture() {
    let mut log = Vec::new();
    // Best single: 6.5% over 500 ms and 5% over 1.5 s out of 1000.
    for i in 0..1000 {
        let ms = match i {
            0..50 => 1800.0,
            50..65 => 700.0,
            _ => 60.0,
        };
        log.push(record(Strategy::Single(0), ms));
    }
    for _ in 0..1000 {
        log.push(record(Strategy::Single(1), 1900.0));
    }
    // Parallel-10: 1% over 500 ms and 0.1% over 1.5 s.
    for i in 0..1000 {
        let ms = match i {
            0 => 1600.0,
            1..10 => 600.0,
            _ => 30.0,
        };
        log.push(record(Strategy::Parallel(10), ms));
    }
    let r = analyze(&log, AnalyzeConfig::default()).unwrap();
    assert_eq!(r.best_single, Some(Strategy::Single(0)));
    let c = r.versus_best_single(Strategy::Parallel(10)).unwrap();
    assert!((c.factor_over_500ms - 6.5).abs() < 1e-9, "{}", c.factor_over_500ms);
    assert!((c.factor_over_1500ms - 50.0).abs() < 1e-9, "{}", c.factor_over_1500ms);
    assert!(c.mean_reduction_pct > 0.0);
    assert!(r.versus_best_fixed(Strategy::Parallel(10)).is_none());
}

/// Expected minimum of independent exponentials is 1/Σ(1/mean), so the saving
/// from the m-th resolver shrinks with m.
#[test]
fn marginal_saving_decreases() {
    let means: Vec<f64> = (0..10).map(|i| 50.0 + 10.0 * i as f64).collect();
    let oracle = |m: usize| 1.0 / means[..m].iter().map(|x| 1.0 / x).sum::<f64>();
    let analytic: Vec<f64> = (2..=10).map(|m| oracle(m - 1) - oracle(m)).collect();
    assert!(analytic.windows(2).all(|w| w[1] < w[0]));

    let mut p = SimulatedProber::new(means.iter().map(|&m| exp(m)).collect(), 2000.0, 77).unwrap();
    let order: Vec<usize> = (0..10).collect();
    let cfg = CampaignConfig::new(400_000, 13);
    let log = run_campaign(&mut p, &order, &names(), &cfg).unwrap();
    let r = analyze(&log, AnalyzeConfig::default()).unwrap();
    assert_eq!(r.marginal.len(), 9);
    for (mg, want) in r.marginal.iter().zip(&analytic) {
        assert!((mg.saved_ms - want).abs() < 1.0, "m={} {} vs {}", mg.m, mg.saved_ms, want);
    }
    // Early additions clear the 16 ms/KB bar, late ones do not.
    assert!(r.marginal[0].worthwhile && !r.marginal[8].worthwhile);
    // With the three steepest steps, the observed savings still decrease.
    assert!(r.marginal[0].saved_ms > r.marginal[1].saved_ms);
    assert!(r.marginal[1].saved_ms > r.marginal[2].saved_ms);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_response_bounds(
        means in prop::collection::vec(1.0f64..3000.0, 1..6),
        drops in prop::collection::vec(0.0f64..1.0, 6),
        seed in any::<u64>(),
    ) {
        let resolvers: Vec<_> = means
            .iter()
            .zip(&drops)
            .map(|(&m, &d)| VirtualResolver { delay: DelayLaw::Exponential { mean: m }, drop_probability: d })
            .collect();
        let k = resolvers.len();
        let mut p = SimulatedProber::new(resolvers, 2000.0, seed).unwrap();
        let targets: Vec<usize> = (0..k).collect();
        for _ in 0..20 {
            let o = p.probe("a.example", &targets).unwrap();
            prop_assert!(o.latency_ms > 0.0 && o.latency_ms <= LOSS_MS);
            prop_assert!(!o.lost || o.latency_ms == LOSS_MS);
            for t in o.per_target.iter().flatten() {
                prop_assert!(o.latency_ms <= *t);
            }
        }
    }
}
