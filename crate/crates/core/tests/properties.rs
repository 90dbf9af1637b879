use proptest::prelude::*;

use redundancy_core::analytic::{geometric_approx_threshold, mm1_mean, two_moment_mean, ApproxModel};
use redundancy_core::econ::{break_even, CostPlan, ValueEstimate};
use redundancy_core::handshake::{handshake_distribution, HandshakeParams};
use redundancy_core::sim::{run_simulation, SimConfig};
use redundancy_core::ServiceDistribution;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pk_reduces_to_mm1(rho in 0.0..0.99f64) {
        let a = two_moment_mean(rho, 1.0).unwrap();
        let b = mm1_mean(rho, false).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn sigma_increases_with_load(scv in 0.0..20.0f64, a in 0.01..0.98f64, b in 0.01..0.98f64) {
        prop_assume!(a < b);
        let sa = ApproxModel::new(scv, a).unwrap().sigma;
        let sb = ApproxModel::new(scv, b).unwrap().sigma;
        prop_assert!(sa < sb && sb < 1.0 && sa >= 0.0);
    }

    #[test]
    fn approx_threshold_is_a_valid_load(scv in 0.0..50.0f64) {
        let t = geometric_approx_threshold(scv).unwrap();
        prop_assert!(t > 0.0 && t < 0.5);
    }

    #[test]
    fn break_even_scales_exactly(cost in 0.01..100.0f64, value in 0.01..100.0f64) {
        let plan = CostPlan::new("p", cost).unwrap();
        let plan2 = CostPlan::new("p", 2.0 * cost).unwrap();
        let v = ValueEstimate::new("v", value).unwrap();
        let v2 = ValueEstimate::new("v", 2.0 * value).unwrap();
        let base = break_even(&plan, &v).unwrap();
        prop_assert_eq!(break_even(&plan2, &v).unwrap(), 2.0 * base);
        prop_assert_eq!(break_even(&plan, &v2).unwrap(), base / 2.0);
    }

    #[test]
    fn duplicated_handshake_dominates(rtt in 1.0..500.0f64, p in 0.0..0.2f64, frac in 0.0..1.0f64) {
        let params = HandshakeParams::new(rtt).with_loss(p, p * frac);
        let undup = handshake_distribution(&params, false).unwrap();
        let dup = handshake_distribution(&params, true).unwrap();
        for &(t, _) in undup.atoms.iter().chain(dup.atoms.iter()) {
            prop_assert!(dup.cdf(t) >= undup.cdf(t) - 1e-12);
        }
        let total: f64 = undup.atoms.iter().map(|a| a.1).sum();
        prop_assert!((total + undup.residual - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_counters_and_min_bound(
        n in 2usize..8,
        k in 1usize..3,
        rho in 0.05..0.45f64,
        c in 0.0..0.5f64,
        seed in 0u64..1000,
    ) {
        prop_assume!(k <= n);
        let d = ServiceDistribution::two_point(0.5).unwrap();
        let cfg = SimConfig::new(n, k, rho, d.clone())
            .with_overhead(c)
            .with_seed(seed)
            .with_horizon(2_000, 2);
        let res = run_simulation(&cfg).unwrap();
        prop_assert_eq!(res.arrivals, 4_000);
        prop_assert_eq!(res.replica_completions, 4_000 * k as u64);
        prop_assert_eq!(res.n_measured, 2 * (2_000 - cfg.warmup_count()));
        let floor = d.atoms().unwrap()[0].0 + if k >= 2 { c } else { 0.0 };
        prop_assert!(res.samples[0] >= floor - 1e-12);
        prop_assert!(res.samples.windows(2).all(|w| w[0] <= w[1]));
    }
}
