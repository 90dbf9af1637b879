//! Replicated FIFO queueing simulation.
//!
//! N identical FIFO servers receive a system-wide Poisson stream of
//! requests at rate `N * base_load`. Each request is copied to `k` distinct
//! servers chosen uniformly at random; every copy runs to completion and
//! the request finishes with its earliest copy. With FIFO service and no
//! cancellation a server is fully described by the epoch at which it next
//! becomes idle, so each copy is a single Lindley step.

use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ServiceDistribution;
use crate::error::{invalid, Error, Result};
use crate::rng::{child, StreamRng, TAG_ARRIVALS, TAG_SYSTEM};
use crate::stats::{ecdf_sorted, quantile_sorted, sort_f64, Estimate};

pub const DEFAULT_QUANTILES: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

/// Inputs of one replicated-queueing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_servers: usize,
    /// Copies per request, `1..=n_servers`.
    pub replication: usize,
    /// Per-server utilization from unreplicated traffic.
    pub base_load: f64,
    pub service: ServiceDistribution,
    /// Service units added to every request when `replication >= 2`.
    pub client_overhead: f64,
    /// Requests simulated per replication.
    pub n_requests: usize,
    pub warmup_fraction: f64,
    /// Independent replications used for the confidence interval.
    pub replications: usize,
    pub seed: u64,
    pub confidence: f64,
    pub quantile_levels: Vec<f64>,
}

impl SimConfig {
    pub fn new(
        n_servers: usize,
        replication: usize,
        base_load: f64,
        service: ServiceDistribution,
    ) -> Self {
        SimConfig {
            n_servers,
            replication,
            base_load,
            service,
            client_overhead: 0.0,
            n_requests: 200_000,
            warmup_fraction: 0.2,
            replications: 10,
            seed: 1,
            confidence: 0.95,
            quantile_levels: DEFAULT_QUANTILES.to_vec(),
        }
    }

    pub fn with_replication(mut self, k: usize) -> Self {
        self.replication = k;
        self
    }

    pub fn with_overhead(mut self, c: f64) -> Self {
        self.client_overhead = c;
        self
    }

    pub fn with_load(mut self, load: f64) -> Self {
        self.base_load = load;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon(mut self, n_requests: usize, replications: usize) -> Self {
        self.n_requests = n_requests;
        self.replications = replications;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_servers == 0 {
            return Err(invalid("n_servers", "need at least one server"));
        }
        if self.replication == 0 || self.replication > self.n_servers {
            return Err(invalid(
                "replication",
                format!(
                    "k = {} must lie in 1..={} (number of servers)",
                    self.replication, self.n_servers
                ),
            ));
        }
        if !(self.base_load > 0.0) || !self.base_load.is_finite() {
            return Err(invalid("base_load", format!("{} must be positive", self.base_load)));
        }
        let product = self.replication as f64 * self.base_load;
        if product >= 1.0 {
            return Err(Error::Unstable { product });
        }
        if !(self.client_overhead >= 0.0) || !self.client_overhead.is_finite() {
            return Err(invalid("client_overhead", "must be finite and nonnegative"));
        }
        if self.n_requests == 0 {
            return Err(invalid("n_requests", "need at least one request"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(invalid("warmup_fraction", "must lie in [0, 1)"));
        }
        if self.warmup_count() >= self.n_requests {
            return Err(invalid("warmup_fraction", "no requests left after warmup"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "need at least one replication"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(invalid("confidence", "must lie in (0, 1)"));
        }
        if self.quantile_levels.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
            return Err(invalid("quantile_levels", "levels must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn warmup_count(&self) -> usize {
        (self.warmup_fraction * self.n_requests as f64).floor() as usize
    }

    fn arrival_rate(&self) -> f64 {
        self.n_servers as f64 * self.base_load
    }

    fn overhead(&self) -> f64 {
        if self.replication >= 2 {
            self.client_overhead
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub q: f64,
    pub value: f64,
}

/// Response-time statistics of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Mean response over replications, with its confidence half-width.
    pub mean: Estimate,
    pub quantiles: Vec<QuantilePoint>,
    pub n_measured: usize,
    pub replication_means: Vec<f64>,
    pub arrivals: u64,
    pub replica_completions: u64,
    /// Pooled post-warmup response times, ascending.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl SimResult {
    pub fn quantile(&self, q: f64) -> f64 {
        quantile_sorted(&self.samples, q)
    }
}

/// Empirical P(response <= t) at each grid point.
pub fn response_cdf(result: &SimResult, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("grid", "grid must be sorted ascending"));
    }
    Ok(grid.iter().map(|&t| ecdf_sorted(&result.samples, t)).collect())
}

/// One request as seen by the simulator, for inspection in tests and
/// scripted runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestTrace<'a> {
    pub index: usize,
    pub arrival: f64,
    pub servers: &'a [usize],
    /// Sojourn (wait + service) of each copy, aligned with `servers`.
    pub sojourns: &'a [f64],
    pub response: f64,
}

/// Output of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutput {
    pub mean: f64,
    pub n_measured: usize,
    pub arrivals: u64,
    pub replica_completions: u64,
    /// Post-warmup responses in arrival order, when requested.
    pub samples: Option<Vec<f64>>,
}

struct Servers {
    free_at: Vec<f64>,
    order: Vec<usize>,
    picked: Vec<usize>,
    sojourns: Vec<f64>,
}

impl Servers {
    fn new(n: usize, k: usize) -> Self {
        Servers {
            free_at: vec![0.0; n],
            order: (0..n).collect(),
            picked: Vec::with_capacity(k),
            sojourns: Vec::with_capacity(k),
        }
    }

    /// Copy a request arriving at `t` onto `k` distinct random servers;
    /// returns the earliest copy's sojourn.
    #[inline]
    fn dispatch(
        &mut self,
        t: f64,
        k: usize,
        service: &ServiceDistribution,
        rng: &mut StreamRng,
    ) -> f64 {
        let n = self.order.len();
        self.picked.clear();
        self.sojourns.clear();
        let mut best = f64::INFINITY;
        for i in 0..k {
            // partial Fisher-Yates over a persistent permutation
            let j = if n - i > 1 { rng.random_range(i..n) } else { i };
            self.order.swap(i, j);
            let server = self.order[i];
            let start = t.max(self.free_at[server]);
            let finish = start + service.sample(rng);
            self.free_at[server] = finish;
            let sojourn = finish - t;
            best = best.min(sojourn);
            self.picked.push(server);
            self.sojourns.push(sojourn);
        }
        best
    }
}

fn simulate<I, F>(config: &SimConfig, arrivals: I, system: &mut StreamRng, keep: bool, mut observe: F) -> ReplicationOutput
where
    I: Iterator<Item = f64>,
    F: FnMut(&RequestTrace<'_>),
{
    let k = config.replication;
    let overhead = config.overhead();
    let warmup = config.warmup_count();
    let mut servers = Servers::new(config.n_servers, k);
    let mut sum = 0.0;
    let mut measured = 0usize;
    let mut count = 0u64;
    let mut samples = keep.then(|| Vec::with_capacity(config.n_requests.saturating_sub(warmup)));
    for (index, t) in arrivals.enumerate() {
        let response = servers.dispatch(t, k, &config.service, system) + overhead;
        count += 1;
        observe(&RequestTrace {
            index,
            arrival: t,
            servers: &servers.picked,
            sojourns: &servers.sojourns,
            response,
        });
        if index >= warmup {
            sum += response;
            measured += 1;
            if let Some(s) = samples.as_mut() {
                s.push(response);
            }
        }
    }
    let mean = if measured > 0 { sum / measured as f64 } else { f64::NAN };
    ReplicationOutput {
        mean,
        n_measured: measured,
        arrivals: count,
        replica_completions: count * k as u64,
        samples,
    }
}

/// Poisson arrival epochs for replication `rep`. The stream depends only on
/// the seed and replication index, so systems compared at the same load
/// see identical arrivals.
fn poisson_epochs(config: &SimConfig, rep: usize) -> impl Iterator<Item = f64> {
    let mut rng = child(config.seed, &[TAG_ARRIVALS, rep as u64]);
    let rate = config.arrival_rate();
    let mut t = 0.0;
    (0..config.n_requests).map(move |_| {
        t += -(1.0 - rng.random::<f64>()).ln() / rate;
        t
    })
}

fn system_rng(config: &SimConfig, rep: usize) -> StreamRng {
    child(
        config.seed,
        &[TAG_SYSTEM, config.replication as u64, rep as u64],
    )
}

/// Run replication `rep` of `config` on its own seeded streams.
pub fn run_replication(config: &SimConfig, rep: usize, keep_samples: bool) -> ReplicationOutput {
    let mut system = system_rng(config, rep);
    simulate(config, poisson_epochs(config, rep), &mut system, keep_samples, |_| {})
}

/// Run a replication against an explicit list of arrival epochs instead of
/// the Poisson stream, calling `observe` for every request.
pub fn run_scripted<F>(config: &SimConfig, epochs: &[f64], observe: F) -> Result<ReplicationOutput>
where
    F: FnMut(&RequestTrace<'_>),
{
    if epochs.windows(2).any(|w| w[1] < w[0]) || epochs.iter().any(|t| !t.is_finite()) {
        return Err(invalid("epochs", "arrival epochs must be finite and nondecreasing"));
    }
    let mut scripted = config.clone();
    scripted.n_requests = epochs.len().max(1);
    scripted.validate()?;
    let mut system = system_rng(&scripted, 0);
    Ok(simulate(&scripted, epochs.iter().copied(), &mut system, true, observe))
}

/// Parse a text file of arrival epochs, one per line; blank lines and `#`
/// comments are ignored.
pub fn parse_epochs(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| invalid("epochs", format!("`{l}` is not a number")))
        })
        .collect()
}

fn collect(config: &SimConfig, outputs: Vec<ReplicationOutput>) -> SimResult {
    let replication_means: Vec<f64> = outputs.iter().map(|o| o.mean).collect();
    let mean = Estimate::from_samples(&replication_means, config.confidence);
    let n_measured = outputs.iter().map(|o| o.n_measured).sum();
    let arrivals = outputs.iter().map(|o| o.arrivals).sum();
    let replica_completions = outputs.iter().map(|o| o.replica_completions).sum();
    let mut samples: Vec<f64> = Vec::with_capacity(n_measured);
    for o in outputs {
        samples.extend(o.samples.unwrap_or_default());
    }
    sort_f64(&mut samples);
    let quantiles = config
        .quantile_levels
        .iter()
        .map(|&q| QuantilePoint {
            q,
            value: quantile_sorted(&samples, q),
        })
        .collect();
    SimResult {
        mean,
        quantiles,
        n_measured,
        replication_means,
        arrivals,
        replica_completions,
        samples,
    }
}

/// Simulate `config.replications` independent replications and pool them.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let outputs: Vec<ReplicationOutput> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep, true))
        .collect();
    Ok(collect(config, outputs))
}

/// Baseline and replicated systems run side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub base: SimResult,
    pub replicated: SimResult,
    /// mean_replicated - mean_base, with a half-width from the
    /// per-replication differences.
    pub delta: Estimate,
}

fn check_pair(base: &SimConfig, rep: &SimConfig) -> Result<()> {
    base.validate()?;
    rep.validate()?;
    if base.replication != 1 {
        return Err(invalid("replication", "baseline system must use k = 1"));
    }
    if rep.replication < 2 {
        return Err(invalid("replication", "replicated system must use k >= 2"));
    }
    let same = base.n_servers == rep.n_servers
        && base.base_load == rep.base_load
        && base.service == rep.service
        && base.n_requests == rep.n_requests
        && base.warmup_fraction == rep.warmup_fraction
        && base.replications == rep.replications
        && base.seed == rep.seed;
    if !same {
        return Err(invalid(
            "config",
            "paired configs may differ only in replication and client_overhead",
        ));
    }
    Ok(())
}

/// Per-replication means of a baseline / replicated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMeans {
    pub base: f64,
    pub replicated: f64,
}

impl PairMeans {
    pub fn delta(&self) -> f64 {
        self.replicated - self.base
    }
}

/// Means of replications `reps` for both systems, sharing arrival epochs.
/// Used by threshold probes that add replications incrementally.
pub fn paired_means(base: &SimConfig, rep: &SimConfig, reps: Range<usize>) -> Result<Vec<PairMeans>> {
    check_pair(base, rep)?;
    Ok(reps
        .into_par_iter()
        .map(|r| PairMeans {
            base: run_replication(base, r, false).mean,
            replicated: run_replication(rep, r, false).mean,
        })
        .collect())
}

/// Run both systems on common arrival epochs (service draws and server
/// choices stay independent per system).
pub fn paired_comparison(base: &SimConfig, rep: &SimConfig) -> Result<PairedComparison> {
    check_pair(base, rep)?;
    let outputs: Vec<(ReplicationOutput, ReplicationOutput)> = (0..base.replications)
        .into_par_iter()
        .map(|r| (run_replication(base, r, true), run_replication(rep, r, true)))
        .collect();
    let deltas: Vec<f64> = outputs.iter().map(|(b, r)| r.mean - b.mean).collect();
    let (b, r): (Vec<_>, Vec<_>) = outputs.into_iter().unzip();
    Ok(PairedComparison {
        base: collect(base, b),
        replicated: collect(rep, r),
        delta: Estimate::from_samples(&deltas, base.confidence),
    })
}

/// CSV body `t,cdf_base,cdf_rep` on `grid`.
pub fn cdf_csv(pair: &PairedComparison, grid: &[f64]) -> Result<String> {
    let b = response_cdf(&pair.base, grid)?;
    let r = response_cdf(&pair.replicated, grid)?;
    let mut out = String::from("t,cdf_base,cdf_rep\n");
    for ((t, b), r) in grid.iter().zip(b).zip(r) {
        out.push_str(&format!("{t},{b},{r}\n"));
    }
    Ok(out)
}
