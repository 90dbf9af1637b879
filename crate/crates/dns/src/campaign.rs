//! Stage 1 ranks resolvers by mean latency; stage 2 runs randomly chosen
//! single and parallel strategies against the ranking.

use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use redundancy_core::rng::child;

use crate::error::{DnsError, Result};
use crate::probe::{Prober, Strategy, LOSS_MS};

const TAG_RANK: u64 = 0x4A1;
const TAG_CAMPAIGN: u64 = 0xCA3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub timestamp_ms: u64,
    pub name: String,
    pub strategy: Strategy,
    pub latency_ms: f64,
    pub lost: bool,
    /// Resolver indices queried, in the order of `per_resolver`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<usize>,
    /// Observed response time of each queried resolver, when it answered.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_resolver: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub trials: usize,
    #[serde(with = "millis")]
    pub gap: Duration,
    pub seed: u64,
}

impl CampaignConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        CampaignConfig {
            trials,
            gap: Duration::from_secs(5),
            seed,
        }
    }

    pub fn with_gap(mut self, gap: Duration) -> Self {
        self.gap = gap;
        self
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Resolver indices that `strategy` queries under `order` (best first).
pub fn targets_for(strategy: Strategy, order: &[usize]) -> Result<Vec<usize>> {
    match strategy {
        Strategy::Single(i) => Ok(vec![i]),
        Strategy::Parallel(m) if m >= 1 && m <= order.len() => Ok(order[..m].to_vec()),
        Strategy::Parallel(m) => Err(DnsError::Config(format!(
            "parallel:{m} needs {m} ranked resolvers, have {}",
            order.len()
        ))),
    }
}

/// Run one trial and record it.
pub fn probe_once<P: Prober + ?Sized>(
    prober: &mut P,
    name: &str,
    strategy: Strategy,
    order: &[usize],
) -> Result<TrialRecord> {
    let targets = targets_for(strategy, order)?;
    let timestamp_ms = prober.now_ms();
    let outcome = prober.probe(name, &targets)?;
    Ok(TrialRecord {
        timestamp_ms,
        name: name.to_string(),
        strategy,
        latency_ms: outcome.latency_ms,
        lost: outcome.lost,
        targets,
        per_resolver: outcome.per_target,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Resolver indices, lowest mean first; untried resolvers last.
    pub order: Vec<usize>,
    /// Mean latency per resolver index (losses at the loss value).
    pub means: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub trials: Vec<TrialRecord>,
}

impl Ranking {
    pub fn from_trials(resolvers: usize, trials: Vec<TrialRecord>) -> Self {
        let mut sums = vec![0.0; resolvers];
        let mut counts = vec![0usize; resolvers];
        for t in &trials {
            if let Strategy::Single(i) = t.strategy {
                if i < resolvers {
                    sums[i] += t.latency_ms.min(LOSS_MS);
                    counts[i] += 1;
                }
            }
        }
        let means: Vec<Option<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect();
        let mut order: Vec<usize> = (0..resolvers).collect();
        order.sort_by(|&a, &b| {
            let key = |i: usize| means[i].unwrap_or(f64::INFINITY);
            key(a).total_cmp(&key(b)).then(a.cmp(&b))
        });
        Ranking {
            order,
            means,
            counts,
            trials,
        }
    }
}

fn check_corpus(corpus: &[String]) -> Result<()> {
    if corpus.is_empty() {
        return Err(DnsError::Config("name corpus is empty".into()));
    }
    Ok(())
}

/// Stage 1: each trial queries a uniformly random name at a uniformly random
/// resolver. Names are drawn with replacement.
pub fn rank_resolvers<P: Prober + ?Sized>(
    prober: &mut P,
    corpus: &[String],
    config: &CampaignConfig,
) -> Result<Ranking> {
    check_corpus(corpus)?;
    let r = prober.resolver_count();
    let mut rng = child(config.seed, &[TAG_RANK]);
    let mut trials = Vec::with_capacity(config.trials);
    for t in 0..config.trials {
        if t > 0 {
            prober.pause(config.gap);
        }
        let name = corpus.choose(&mut rng).expect("nonempty");
        let i = rng.random_range(0..r);
        trials.push(probe_once(prober, name, Strategy::Single(i), &[])?);
    }
    Ok(Ranking::from_trials(r, trials))
}

/// All 2R stage-2 strategies: every single resolver, then parallel 1..R.
pub fn strategies(resolvers: usize) -> Vec<Strategy> {
    (0..resolvers)
        .map(Strategy::Single)
        .chain((1..=resolvers).map(Strategy::Parallel))
        .collect()
}

/// Stage 2: each trial picks one of the 2R strategies uniformly at random.
pub fn run_campaign<P: Prober + ?Sized>(
    prober: &mut P,
    order: &[usize],
    corpus: &[String],
    config: &CampaignConfig,
) -> Result<Vec<TrialRecord>> {
    check_corpus(corpus)?;
    let r = prober.resolver_count();
    let mut seen = vec![false; r];
    if order.len() != r || order.iter().any(|&i| i >= r || std::mem::replace(&mut seen[i], true)) {
        return Err(DnsError::Config(format!(
            "ranking must be a permutation of the {r} resolvers"
        )));
    }
    let all = strategies(r);
    let mut rng = child(config.seed, &[TAG_CAMPAIGN]);
    let mut trials = Vec::with_capacity(config.trials);
    for t in 0..config.trials {
        if t > 0 {
            prober.pause(config.gap);
        }
        let name = corpus.choose(&mut rng).expect("nonempty");
        let strategy = *all.choose(&mut rng).expect("nonempty");
        trials.push(probe_once(prober, name, strategy, order)?);
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::DelayLaw;
    use crate::probe::{SimulatedProber, VirtualResolver};

    fn steady(ms: f64) -> VirtualResolver {
        VirtualResolver {
            delay: DelayLaw::Fixed(ms),
            drop_probability: 0.0,
        }
    }

    fn corpus() -> Vec<String> {
        vec!["a.test".into(), "b.test".into()]
    }

    #[test]
    fn ranking_orders_by_mean() {
        let mut p = SimulatedProber::new(vec![steady(40.0), steady(10.0)], 2000.0, 3).unwrap();
        let rank = rank_resolvers(&mut p, &corpus(), &CampaignConfig::new(50, 1)).unwrap();
        assert_eq!(rank.order, vec![1, 0]);
        assert_eq!(rank.means, vec![Some(40.0), Some(10.0)]);
        assert_eq!(rank.trials.len(), 50);
        // Virtual clock advanced by the default gap between trials.
        assert_eq!(rank.trials[1].timestamp_ms - rank.trials[0].timestamp_ms, 5000);
    }

    #[test]
    fn drops_count_at_loss_value() {
        let flaky = VirtualResolver {
            drop_probability: 0.5,
            ..steady(1.0)
        };
        let mut p = SimulatedProber::new(vec![flaky, steady(100.0)], 2000.0, 5).unwrap();
        let rank = rank_resolvers(&mut p, &corpus(), &CampaignConfig::new(400, 2)).unwrap();
        assert_eq!(rank.order, vec![1, 0]);
        assert!(rank.means[0].unwrap() > 500.0);
    }

    #[test]
    fn single_resolver_campaign() {
        let mut p = SimulatedProber::new(vec![steady(30.0)], 2000.0, 1).unwrap();
        let rank = rank_resolvers(&mut p, &corpus(), &CampaignConfig::new(3, 1)).unwrap();
        assert_eq!(rank.order, vec![0]);
        let log = run_campaign(&mut p, &rank.order, &corpus(), &CampaignConfig::new(40, 1)).unwrap();
        assert!(log.iter().all(|t| t.latency_ms == 30.0));
        let kinds: std::collections::BTreeSet<_> = log.iter().map(|t| t.strategy).collect();
        assert_eq!(kinds.into_iter().collect::<Vec<_>>(), strategies(1));
    }

    #[test]
    fn campaign_rejects_bad_order() {
        let mut p = SimulatedProber::new(vec![steady(1.0), steady(2.0)], 2000.0, 1).unwrap();
        let cfg = CampaignConfig::new(1, 1);
        assert!(run_campaign(&mut p, &[0, 0], &corpus(), &cfg).is_err());
        assert!(run_campaign(&mut p, &[0], &corpus(), &cfg).is_err());
        assert!(run_campaign(&mut p, &[1, 0], &[], &cfg).is_err());
    }
}
