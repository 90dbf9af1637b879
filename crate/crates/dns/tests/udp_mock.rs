use std::time::Duration;

use redundancy_dns::{
    probe_once, rank_resolvers, CampaignConfig, DelayLaw, MockConfig, MockServer, Prober,
    ResolverSpec, Strategy, UdpProber, LOSS_MS,
};

const TIMEOUT: Duration = Duration::from_millis(2000);

fn spawn(delay: DelayLaw, drop: f64, seed: u64) -> MockServer {
    MockServer::spawn_local(MockConfig::new(delay).with_drop(drop).with_seed(seed)).unwrap()
}

fn specs(servers: &[&MockServer]) -> Vec<ResolverSpec> {
    servers
        .iter()
        .enumerate()
        .map(|(i, s)| ResolverSpec {
            label: format!("mock{i}"),
            address: s.local_addr(),
        })
        .collect()
}

fn names() -> Vec<String> {
    vec!["example.com".into(), "www.example.org".into()]
}

#[test]
fn first_of_two_fixed_delays() {
    let fast = spawn(DelayLaw::Fixed(10.0), 0.0, 1);
    let slow = spawn(DelayLaw::Fixed(50.0), 0.0, 2);
    let mut p = UdpProber::new(specs(&[&fast, &slow]), TIMEOUT, 9)
        .unwrap()
        .wait_for_all(true);
    for _ in 0..5 {
        let t = probe_once(&mut p, "example.com", Strategy::Parallel(2), &[0, 1]).unwrap();
        assert!(!t.lost);
        assert!(t.latency_ms >= 10.0 && t.latency_ms < 25.0, "{}", t.latency_ms);
        let fast_t = t.per_resolver[0].unwrap();
        let slow_t = t.per_resolver[1].unwrap();
        assert_eq!(t.latency_ms, fast_t);
        assert!(slow_t >= 50.0 && t.latency_ms <= slow_t);
    }
    let stats = fast.shutdown();
    assert_eq!((stats.received, stats.answered), (5, 5));
}

#[test]
fn single_resolver_latency() {
    let m = spawn(DelayLaw::Fixed(30.0), 0.0, 3);
    let mut p = UdpProber::new(specs(&[&m]), TIMEOUT, 1).unwrap();
    let t = probe_once(&mut p, "example.com", Strategy::Single(0), &[0]).unwrap();
    assert!(t.latency_ms >= 30.0 && t.latency_ms < 45.0, "{}", t.latency_ms);
}

#[test]
fn all_drop_is_lost_at_two_seconds() {
    let a = spawn(DelayLaw::Fixed(1.0), 1.0, 4);
    let b = spawn(DelayLaw::Fixed(1.0), 1.0, 5);
    let mut p = UdpProber::new(specs(&[&a, &b]), TIMEOUT, 2).unwrap();
    let t = probe_once(&mut p, "example.com", Strategy::Parallel(2), &[0, 1]).unwrap();
    assert!(t.lost);
    assert_eq!(t.latency_ms, LOSS_MS);
    assert_eq!(a.shutdown().dropped, 1);
}

#[test]
fn closed_port_is_loss_not_error() {
    let gone = {
        let s = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
        s.local_addr().unwrap()
    };
    let spec = vec![ResolverSpec {
        label: "gone".into(),
        address: gone,
    }];
    let mut p = UdpProber::new(spec, Duration::from_millis(100), 1).unwrap();
    let o = p.probe("example.com", &[0]).unwrap();
    assert!(o.lost && o.latency_ms == LOSS_MS);
}

#[test]
fn ranking_over_udp() {
    let slow = spawn(DelayLaw::Fixed(40.0), 0.0, 6);
    let fast = spawn(DelayLaw::Fixed(10.0), 0.0, 7);
    let mut p = UdpProber::new(specs(&[&slow, &fast]), TIMEOUT, 3).unwrap();
    let cfg = CampaignConfig::new(12, 4).with_gap(Duration::ZERO);
    let rank = rank_resolvers(&mut p, &names(), &cfg).unwrap();
    assert_eq!(rank.order, vec![1, 0]);
    assert!(rank.means[1].unwrap() < rank.means[0].unwrap());
}

/// Parallel-2 first-response times over loopback against the analytic law of
/// the minimum, 1 − Π(1 − F_i(t)).
#[test]
fn parallel_first_response_matches_min_law() {
    let laws = [
        DelayLaw::Exponential { mean: 40.0 },
        DelayLaw::Exponential { mean: 60.0 },
    ];
    let a = spawn(laws[0], 0.0, 11);
    let b = spawn(laws[1], 0.0, 12);
    let resolvers = specs(&[&a, &b]);
    let threads = 16;
    let per_thread = 625;
    let mut samples: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|i| {
                let resolvers = resolvers.clone();
                s.spawn(move || {
                    let mut p = UdpProber::new(resolvers, TIMEOUT, 100 + i).unwrap();
                    (0..per_thread)
                        .map(|_| {
                            probe_once(&mut p, "example.com", Strategy::Parallel(2), &[0, 1])
                                .unwrap()
                                .latency_ms
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(samples.len(), 10_000);
    samples.sort_by(f64::total_cmp);
    let min_cdf = |t: f64| 1.0 - laws.iter().map(|l| 1.0 - l.cdf(t)).product::<f64>();
    let n = samples.len() as f64;
    let ks = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = min_cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.05, "KS distance {ks}");
}
