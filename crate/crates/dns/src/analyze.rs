//! First-response statistics over a trial log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use redundancy_core::econ::cost_effectiveness;

use crate::campaign::TrialRecord;
use crate::error::{DnsError, Result};
use crate::probe::Strategy;

pub const SLOW_MS: f64 = 500.0;
pub const VERY_SLOW_MS: f64 = 1500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    /// Bytes sent and received per extra copy of a query.
    pub bytes_per_copy: f64,
    /// Break-even latency saving, ms per KB.
    pub benchmark_ms_per_kb: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            bytes_per_copy: 500.0,
            benchmark_ms_per_kb: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: Strategy,
    pub trials: usize,
    pub lost: usize,
    pub mean_ms: f64,
    pub frac_over_500ms: f64,
    pub frac_over_1500ms: f64,
}

/// How `strategy` compares with a baseline. Factors are baseline fraction over
/// strategy fraction: 1 when both are zero, infinite when only the strategy's
/// is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub strategy: Strategy,
    pub baseline: Strategy,
    pub mean_reduction_pct: f64,
    pub factor_over_500ms: f64,
    pub factor_over_1500ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    /// Number of resolvers after adding one more.
    pub m: usize,
    pub saved_ms: f64,
    pub ms_per_kb: f64,
    pub worthwhile: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: AnalyzeConfig,
    pub total_trials: usize,
    /// Strategies that appear in the log, in sorted order.
    pub strategies: Vec<StrategyStats>,
    /// Single resolver with the lowest mean in this log.
    pub best_single: Option<Strategy>,
    pub vs_best_single: Vec<Comparison>,
    /// Against parallel(1), the top-ranked resolver fixed in advance.
    pub vs_best_fixed: Vec<Comparison>,
    /// Saving from parallel(m-1) to parallel(m), for each m with both present.
    pub marginal: Vec<Marginal>,
}

impl Report {
    pub fn stats(&self, s: Strategy) -> Option<&StrategyStats> {
        self.strategies.iter().find(|x| x.strategy == s)
    }

    pub fn versus_best_single(&self, s: Strategy) -> Option<&Comparison> {
        self.vs_best_single.iter().find(|c| c.strategy == s)
    }

    pub fn versus_best_fixed(&self, s: Strategy) -> Option<&Comparison> {
        self.vs_best_fixed.iter().find(|c| c.strategy == s)
    }
}

fn factor(base: f64, x: f64) -> f64 {
    match (base == 0.0, x == 0.0) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => base / x,
    }
}

fn compare(s: &StrategyStats, b: &StrategyStats) -> Comparison {
    Comparison {
        strategy: s.strategy,
        baseline: b.strategy,
        mean_reduction_pct: if b.mean_ms > 0.0 {
            100.0 * (1.0 - s.mean_ms / b.mean_ms)
        } else {
            0.0
        },
        factor_over_500ms: factor(b.frac_over_500ms, s.frac_over_500ms),
        factor_over_1500ms: factor(b.frac_over_1500ms, s.frac_over_1500ms),
    }
}

pub fn analyze(trials: &[TrialRecord], config: AnalyzeConfig) -> Result<Report> {
    if trials.is_empty() {
        return Err(DnsError::Config("trial log is empty".into()));
    }
    if !(config.bytes_per_copy > 0.0) {
        return Err(DnsError::Config("bytes per copy must be > 0".into()));
    }
    let mut groups: BTreeMap<Strategy, Vec<f64>> = BTreeMap::new();
    for t in trials {
        groups.entry(t.strategy).or_default().push(t.latency_ms);
    }
    let lost: BTreeMap<Strategy, usize> = trials.iter().filter(|t| t.lost).fold(
        BTreeMap::new(),
        |mut m, t| {
            *m.entry(t.strategy).or_default() += 1;
            m
        },
    );
    let strategies: Vec<StrategyStats> = groups
        .iter()
        .map(|(&strategy, xs)| {
            let n = xs.len() as f64;
            let over = |c: f64| xs.iter().filter(|&&x| x > c).count() as f64 / n;
            StrategyStats {
                strategy,
                trials: xs.len(),
                lost: lost.get(&strategy).copied().unwrap_or(0),
                mean_ms: xs.iter().sum::<f64>() / n,
                frac_over_500ms: over(SLOW_MS),
                frac_over_1500ms: over(VERY_SLOW_MS),
            }
        })
        .collect();

    let best_single = strategies
        .iter()
        .filter(|s| matches!(s.strategy, Strategy::Single(_)))
        .min_by(|a, b| a.mean_ms.total_cmp(&b.mean_ms));
    let parallel: Vec<&StrategyStats> = strategies
        .iter()
        .filter(|s| matches!(s.strategy, Strategy::Parallel(_)))
        .collect();
    let against = |base: Option<&StrategyStats>| -> Vec<Comparison> {
        base.map(|b| parallel.iter().map(|s| compare(s, b)).collect())
            .unwrap_or_default()
    };
    let fixed = strategies.iter().find(|s| s.strategy == Strategy::Parallel(1));

    let mut marginal = Vec::new();
    for w in parallel.windows(2) {
        if let (Strategy::Parallel(a), Strategy::Parallel(b)) = (w[0].strategy, w[1].strategy) {
            if b == a + 1 {
                let saved_ms = w[0].mean_ms - w[1].mean_ms;
                let ce = cost_effectiveness(saved_ms, config.bytes_per_copy, config.benchmark_ms_per_kb)
                    .map_err(|e| DnsError::Config(e.to_string()))?;
                marginal.push(Marginal {
                    m: b,
                    saved_ms,
                    ms_per_kb: ce.ms_per_kb,
                    worthwhile: ce.worthwhile,
                });
            }
        }
    }

    Ok(Report {
        config,
        total_trials: trials.len(),
        best_single: best_single.map(|s| s.strategy),
        vs_best_single: against(best_single),
        vs_best_fixed: against(fixed),
        marginal,
        strategies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(strategy: Strategy, latency_ms: f64) -> TrialRecord {
        TrialRecord {
            timestamp_ms: 0,
            name: "x.test".into(),
            strategy,
            latency_ms,
            lost: latency_ms >= 2000.0,
            targets: vec![],
            per_resolver: vec![],
        }
    }

    #[test]
    fn identical_latencies() {
        let log: Vec<_> = crate::campaign::strategies(3)
            .into_iter()
            .flat_map(|s| (0..5).map(move |_| trial(s, 80.0)))
            .collect();
        let r = analyze(&log, AnalyzeConfig::default()).unwrap();
        assert_eq!(r.strategies.len(), 6);
        for c in r.vs_best_single.iter().chain(&r.vs_best_fixed) {
            assert_eq!(c.mean_reduction_pct, 0.0);
            assert_eq!((c.factor_over_500ms, c.factor_over_1500ms), (1.0, 1.0));
        }
        assert_eq!(r.marginal.len(), 2);
        assert!(r.marginal.iter().all(|m| m.saved_ms == 0.0 && !m.worthwhile));
    }

    #[test]
    fn absent_strategies_are_absent() {
        let log = vec![trial(Strategy::Single(2), 10.0), trial(Strategy::Parallel(3), 5.0)];
        let r = analyze(&log, AnalyzeConfig::default()).unwrap();
        assert!(r.stats(Strategy::Single(0)).is_none());
        assert!(r.vs_best_fixed.is_empty());
        assert!(r.marginal.is_empty());
        assert_eq!(r.best_single, Some(Strategy::Single(2)));
        assert!(analyze(&[], AnalyzeConfig::default()).is_err());
    }

    #[test]
    fn marginal_ms_per_kb() {
        let mut log = vec![trial(Strategy::Parallel(1), 100.0)];
        log.push(trial(Strategy::Parallel(2), 90.0));
        let r = analyze(&log, AnalyzeConfig::default()).unwrap();
        let m = &r.marginal[0];
        assert_eq!(m.m, 2);
        assert!((m.ms_per_kb - 10.0 * 1024.0 / 500.0).abs() < 1e-9);
        assert!(m.worthwhile);
    }
}
