//! Threshold-load search and the studies built on it.
//!
//! The threshold is located by bisection on the sign of
//! Δ(ρ) = mean_replicated − mean_base, estimated from paired simulations that
//! share arrival epochs. Every probe at every load reuses the same seed, so
//! neighbouring probes are positively correlated and the sign of Δ changes
//! smoothly along the search.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::two_moment_mean;
use crate::distributions::{Family, ServiceDistribution, SimplexScheme};
use crate::error::{invalid, Result};
use crate::rng::{child, derive_seed};
use crate::sim::{paired_means, run_replication, SimConfig};
use crate::stats::{pooled_quantile, quantile_sorted, sort_f64, Estimate};

const TAG_STUDY: u64 = 0x57D;
const TAG_STUDY_SIM: u64 = 0x57E;
const TAG_BOOTSTRAP: u64 = 0xB00;
const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Lowest and highest probed loads, as fractions of the stability limit 1/k.
const LOWEST_FRACTION: f64 = 0.02;
const HIGHEST_FRACTION: f64 = 0.95;

/// How the unreplicated mean is obtained at each probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// Simulate the k = 1 system on the shared arrival stream.
    Simulated,
    /// Use the exact M/G/1 mean: with k = 1 every server is an M/G/1 queue
    /// fed by a thinned Poisson stream.
    Exact,
    /// `Exact` when E[S^3] is infinite (the sample mean of the baseline then
    /// has infinite variance and converges far too slowly), else `Simulated`.
    #[default]
    Auto,
}

impl BaselineMode {
    pub fn resolve(self, dist: &ServiceDistribution) -> BaselineMode {
        match self {
            BaselineMode::Auto if !dist.has_finite_moment(3.0) => BaselineMode::Exact,
            BaselineMode::Auto => BaselineMode::Simulated,
            other => other,
        }
    }
}

/// Simulation budget of a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchControls {
    pub n_requests: usize,
    pub warmup_fraction: f64,
    /// Replications run before the sign of Δ is first tested.
    pub min_replications: usize,
    /// Probe budget: stop adding replications here even if unresolved.
    pub max_replications: usize,
    /// Replications added per round while the sign is unresolved.
    pub batch: usize,
    pub confidence: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub tolerance: f64,
    pub seed: u64,
    pub baseline: BaselineMode,
}

impl Default for SearchControls {
    fn default() -> Self {
        SearchControls {
            n_requests: 200_000,
            warmup_fraction: 0.2,
            min_replications: 10,
            max_replications: 40,
            batch: 10,
            confidence: 0.95,
            tolerance: 0.004,
            seed: 1,
            baseline: BaselineMode::Auto,
        }
    }
}

impl SearchControls {
    /// Cheap budget for large studies.
    pub fn quick() -> Self {
        SearchControls {
            n_requests: 50_000,
            max_replications: 20,
            tolerance: 0.005,
            ..Self::default()
        }
    }

    /// Long runs for sub-percent comparisons.
    pub fn precise() -> Self {
        SearchControls {
            n_requests: 1_000_000,
            max_replications: 60,
            tolerance: 0.002,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_replications < 2 {
            return Err(invalid("min_replications", "need at least two replications"));
        }
        if self.max_replications < self.min_replications {
            return Err(invalid("max_replications", "must be >= min_replications"));
        }
        if self.batch == 0 {
            return Err(invalid("batch", "must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance", "must be > 0"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(invalid("confidence", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn config(&self, dist: &ServiceDistribution, n_servers: usize, load: f64) -> SimConfig {
        SimConfig {
            n_requests: self.n_requests,
            warmup_fraction: self.warmup_fraction,
            replications: self.max_replications,
            seed: self.seed,
            confidence: self.confidence,
            quantile_levels: Vec::new(),
            ..SimConfig::new(n_servers, 1, load, dist.clone())
        }
    }
}

/// Δ(ρ) at one load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub load: f64,
    pub delta: f64,
    pub half_width: Option<f64>,
    pub replications: usize,
    /// The confidence interval excludes zero.
    pub resolved: bool,
}

/// Estimate Δ at `load`, adding replications until its sign is resolved or
/// the budget runs out.
pub fn probe_delta(
    dist: &ServiceDistribution,
    k: usize,
    n_servers: usize,
    overhead: f64,
    load: f64,
    controls: &SearchControls,
) -> Result<Probe> {
    controls.validate()?;
    let base = controls.config(dist, n_servers, load);
    let rep = base.clone().with_replication(k).with_overhead(overhead);
    base.validate()?;
    rep.validate()?;
    let mode = controls.baseline.resolve(dist);
    let exact_base = match mode {
        BaselineMode::Exact => Some(two_moment_mean(load, dist.moments().scv)?),
        _ => None,
    };
    if exact_base == Some(f64::INFINITY) {
        // Infinite-variance baseline: any stable replicated system wins.
        return Ok(Probe {
            load,
            delta: f64::NEG_INFINITY,
            half_width: Some(0.0),
            replications: 0,
            resolved: true,
        });
    }
    let mut deltas: Vec<f64> = Vec::with_capacity(controls.max_replications);
    loop {
        let done = deltas.len();
        let next = if done == 0 {
            controls.min_replications
        } else {
            (done + controls.batch).min(controls.max_replications)
        };
        match exact_base {
            Some(m) => deltas.extend(
                (done..next)
                    .into_par_iter()
                    .map(|r| run_replication(&rep, r, false).mean - m)
                    .collect::<Vec<_>>(),
            ),
            None => deltas.extend(paired_means(&base, &rep, done..next)?.iter().map(|p| p.delta())),
        }
        let est = Estimate::from_samples(&deltas, controls.confidence);
        if est.sign_resolved() || deltas.len() >= controls.max_replications {
            return Ok(Probe {
                load,
                delta: est.mean,
                half_width: est.half_width,
                replications: est.n,
                resolved: est.sign_resolved(),
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub threshold: f64,
    /// Width of the final bracket.
    pub half_width: f64,
    pub n_probes: usize,
    /// Every probe, in the order run.
    pub evidence: Vec<Probe>,
    /// False when some probe resolved Δ with the sign opposite to the side
    /// of the bracket it lies on, i.e. Δ(ρ) did not change sign only once.
    pub consistent: bool,
    /// Baseline mode actually used.
    pub baseline: BaselineMode,
}

pub fn find_threshold(
    dist: &ServiceDistribution,
    k: usize,
    n_servers: usize,
    overhead: f64,
    controls: &SearchControls,
) -> Result<ThresholdEstimate> {
    if k < 2 {
        return Err(invalid("k", format!("threshold needs k >= 2, got {k}")));
    }
    if n_servers < k {
        return Err(invalid("n_servers", format!("{n_servers} servers cannot host {k} copies")));
    }
    controls.validate()?;
    let cap = 1.0 / k as f64;
    let mut evidence = Vec::new();
    let mut run = |load: f64| -> Result<Probe> {
        let p = probe_delta(dist, k, n_servers, overhead, load, controls)?;
        evidence.push(p);
        Ok(p)
    };
    let low = run(LOWEST_FRACTION * cap)?;
    let outcome = if low.delta >= 0.0 {
        // Replication already hurts at the lightest probed load.
        (0.0, low.load)
    } else {
        let high = run(HIGHEST_FRACTION * cap)?;
        if high.delta < 0.0 {
            (high.load, cap - high.load)
        } else {
            let (mut lo, mut hi) = (low, high);
            while hi.load - lo.load > controls.tolerance {
                let p = run(0.5 * (lo.load + hi.load))?;
                if p.delta < 0.0 {
                    lo = p;
                } else {
                    hi = p;
                }
            }
            (
                crossing(&evidence, &lo, &hi, controls.tolerance),
                hi.load - lo.load,
            )
        }
    };
    let (threshold, half_width) = outcome;
    let consistent = evidence.iter().all(|p| {
        !p.resolved
            || (p.delta < 0.0 && p.load <= threshold + half_width)
            || (p.delta > 0.0 && p.load >= threshold - half_width)
    });
    Ok(ThresholdEstimate {
        threshold,
        half_width,
        n_probes: evidence.len(),
        evidence,
        consistent,
        baseline: controls.baseline.resolve(dist),
    })
}

/// Root of a weighted least-squares line through the probes near the final
/// bracket, clamped to the bracket. Falls back to the chord between the
/// bracket ends when the fitted slope is not positive.
fn crossing(evidence: &[Probe], lo: &Probe, hi: &Probe, tol: f64) -> f64 {
    let window = (lo.load - 2.0 * tol)..=(hi.load + 2.0 * tol);
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in evidence.iter().filter(|p| window.contains(&p.load) && p.delta.is_finite()) {
        let w = match p.half_width {
            Some(h) if h > 0.0 => 1.0 / (h * h),
            _ => 1.0,
        };
        sw += w;
        sx += w * p.load;
        sy += w * p.delta;
        sxx += w * p.load * p.load;
        sxy += w * p.load * p.delta;
    }
    let denom = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / denom;
    let root = if denom > 0.0 && slope > 0.0 && slope.is_finite() {
        let intercept = (sy - slope * sx) / sw;
        -intercept / slope
    } else {
        lo.load + (hi.load - lo.load) * (-lo.delta) / (hi.delta - lo.delta)
    };
    root.clamp(lo.load, hi.load)
}

/// The distribution with parameter `param` in a one-parameter family:
/// Pareto tail index, Weibull shape, or TwoPoint probability of the short
/// atom.
pub fn family_member(family: Family, param: f64) -> Result<ServiceDistribution> {
    match family {
        Family::Pareto => ServiceDistribution::pareto(param),
        Family::Weibull => ServiceDistribution::weibull(param),
        Family::TwoPoint => ServiceDistribution::two_point(param),
        other => Err(invalid(
            "family",
            format!("{other:?} has no sweep parameter"),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub distribution: ServiceDistribution,
    /// Analytic variance; +∞ where it diverges.
    pub variance: f64,
    pub estimate: ThresholdEstimate,
}

/// Threshold at each grid point of a family. Cells run in parallel and share
/// the search seed.
pub fn variance_sweep(
    family: Family,
    grid: &[f64],
    k: usize,
    n_servers: usize,
    controls: &SearchControls,
) -> Result<Vec<SweepPoint>> {
    let dists = grid
        .iter()
        .map(|&p| family_member(family, p))
        .collect::<Result<Vec<_>>>()?;
    grid.par_iter()
        .zip(dists.into_par_iter())
        .map(|(&param, dist)| {
            let estimate = find_threshold(&dist, k, n_servers, 0.0, controls)?;
            Ok(SweepPoint {
                param,
                variance: dist.moments().variance,
                distribution: dist,
                estimate,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("variance,threshold,half_width\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.variance, p.estimate.threshold, p.estimate.half_width
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub support_sizes: Vec<usize>,
    pub schemes: Vec<SimplexScheme>,
    pub n_samples: usize,
    pub k: usize,
    pub n_servers: usize,
    pub master_seed: u64,
    pub controls: SearchControls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySample {
    pub index: usize,
    pub distribution: ServiceDistribution,
    pub scv: f64,
    pub threshold: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub support: usize,
    pub scheme: SimplexScheme,
    pub min: f64,
    pub max: f64,
    pub samples: Vec<StudySample>,
}

fn scheme_code(s: SimplexScheme) -> u64 {
    match s {
        SimplexScheme::UniformSimplex => 0,
        SimplexScheme::Dirichlet01 => 1,
    }
}

/// Thresholds of random unit-mean discrete laws on {1..n}/μ. Sample `i` of
/// cell (n, scheme) draws its law and its simulation seed from streams
/// derived from the master seed and (n, scheme, i), so results do not depend
/// on scheduling.
pub fn random_distribution_study(config: &StudyConfig) -> Result<Vec<StudyCell>> {
    if config.n_samples == 0 {
        return Err(invalid("n_samples", "need at least one sample"));
    }
    if config.support_sizes.contains(&0) {
        return Err(invalid("support_sizes", "support sizes must be >= 1"));
    }
    let mut jobs = Vec::new();
    for &support in &config.support_sizes {
        for &scheme in &config.schemes {
            for index in 0..config.n_samples {
                jobs.push((support, scheme, index));
            }
        }
    }
    let samples = jobs
        .par_iter()
        .map(|&(support, scheme, index)| {
            let path = [support as u64, scheme_code(scheme), index as u64];
            let mut rng = child(config.master_seed, &[&[TAG_STUDY][..], &path].concat());
            let dist = ServiceDistribution::random_unit_mean(support, scheme, &mut rng)?;
            let controls = config.controls.with_seed(derive_seed(
                config.master_seed,
                &[&[TAG_STUDY_SIM][..], &path].concat(),
            ));
            let est = find_threshold(&dist, config.k, config.n_servers, 0.0, &controls)?;
            Ok(StudySample {
                index,
                scv: dist.moments().scv,
                distribution: dist,
                threshold: est.threshold,
                half_width: est.half_width,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    let mut it = samples.into_iter();
    for &support in &config.support_sizes {
        for &scheme in &config.schemes {
            let samples: Vec<StudySample> = it.by_ref().take(config.n_samples).collect();
            let (min, max) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.threshold), hi.max(s.threshold))
            });
            cells.push(StudyCell {
                support,
                scheme,
                min,
                max,
                samples,
            });
        }
    }
    Ok(cells)
}

pub fn study_summary_csv(cells: &[StudyCell]) -> String {
    let mut out = String::from("support,scheme,samples,min_threshold,max_threshold\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.support,
            c.scheme.label(),
            c.samples.len(),
            c.min,
            c.max
        ));
    }
    out
}

pub fn study_samples_csv(cells: &[StudyCell]) -> String {
    let mut out = String::from("support,scheme,index,scv,threshold,half_width,distribution\n");
    for c in cells {
        for s in &c.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{},\"{}\"\n",
                c.support,
                c.scheme.label(),
                s.index,
                s.scv,
                s.threshold,
                s.half_width,
                s.distribution
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPoint {
    pub n: usize,
    pub estimate: ThresholdEstimate,
    pub reference: f64,
    /// (threshold − reference) / reference.
    pub rel_dev: f64,
}

/// Threshold as a function of the number of servers, against a large-N
/// reference: the independent-queues value 1/(k+1) for exponential service
/// (min of k exponential sojourns of rate 1 − kρ against one of rate
/// 1 − ρ), otherwise a simulation at `reference_n` servers.
pub fn threshold_vs_n(
    dist: &ServiceDistribution,
    k: usize,
    ns: &[usize],
    reference_n: usize,
    controls: &SearchControls,
) -> Result<Vec<NPoint>> {
    if let Some(&n) = ns.iter().find(|&&n| n < k) {
        return Err(invalid("n", format!("N = {n} is below k = {k}")));
    }
    let mut all: Vec<usize> = ns.to_vec();
    let analytic = dist.family() == Family::Exponential;
    if !analytic && !all.contains(&reference_n) {
        all.push(reference_n);
    }
    let estimates = all
        .par_iter()
        .map(|&n| find_threshold(dist, k, n, 0.0, controls))
        .collect::<Result<Vec<_>>>()?;
    let reference = if analytic {
        1.0 / (k as f64 + 1.0)
    } else {
        let i = all.iter().position(|&n| n == reference_n).expect("reference included");
        estimates[i].threshold
    };
    Ok(ns
        .iter()
        .zip(estimates)
        .map(|(&n, estimate)| NPoint {
            n,
            rel_dev: (estimate.threshold - reference) / reference,
            reference,
            estimate,
        })
        .collect())
}

pub fn n_scaling_csv(points: &[NPoint]) -> String {
    let mut out = String::from("n,threshold,half_width,reference,rel_dev\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.n, p.estimate.threshold, p.estimate.half_width, p.reference, p.rel_dev
        ));
    }
    out
}

/// Default comparison levels for a tail check starting at `q`.
pub fn tail_levels(q: f64) -> Vec<f64> {
    let mut levels: Vec<f64> = [q, 0.5 * (1.0 + q), 0.99, 0.999]
        .into_iter()
        .filter(|&l| l >= q)
        .collect();
    sort_f64(&mut levels);
    levels.dedup();
    levels
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLevel {
    pub q: f64,
    /// Pooled quantiles of each system.
    pub base: f64,
    pub replicated: f64,
    /// Bootstrap interval for quantile_base − quantile_replicated.
    pub diff_lo: f64,
    pub diff_hi: f64,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub load: f64,
    pub levels: Vec<TailLevel>,
    /// Every level improved beyond sampling noise.
    pub improved: bool,
}

/// Compare response-time quantiles with and without replication. A level
/// counts as improved when the lower bootstrap bound of the baseline minus
/// replicated pooled quantile is positive. Runs `controls.max_replications`
/// replications of `controls.n_requests` requests each.
pub fn tail_improvement_check(
    dist: &ServiceDistribution,
    k: usize,
    n_servers: usize,
    load: f64,
    q: f64,
    levels: Option<&[f64]>,
    controls: &SearchControls,
) -> Result<TailCheck> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("q", format!("{q} outside (0, 1)")));
    }
    if k < 2 {
        return Err(invalid("k", "tail check compares k >= 2 against k = 1"));
    }
    controls.validate()?;
    let levels = match levels {
        Some(l) if l.iter().any(|&x| !(x > 0.0 && x < 1.0)) => {
            return Err(invalid("levels", "levels must lie in (0, 1)"))
        }
        Some(l) => l.to_vec(),
        None => tail_levels(q),
    };
    let base = controls.config(dist, n_servers, load);
    let rep = base.clone().with_replication(k);
    base.validate()?;
    rep.validate()?;
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..controls.max_replications)
        .into_par_iter()
        .map(|r| {
            let mut b = run_replication(&base, r, true).samples.expect("kept");
            let mut p = run_replication(&rep, r, true).samples.expect("kept");
            sort_f64(&mut b);
            sort_f64(&mut p);
            (b, p)
        })
        .collect();
    let all: Vec<usize> = (0..runs.len()).collect();
    let pooled = |system: usize, picks: &[usize], lq: f64| {
        let parts: Vec<&[f64]> = picks
            .iter()
            .map(|&i| if system == 0 { &runs[i].0[..] } else { &runs[i].1[..] })
            .collect();
        pooled_quantile(&parts, lq)
    };
    let mut out = Vec::with_capacity(levels.len());
    for (i, &lq) in levels.iter().enumerate() {
        // Cluster bootstrap: resample whole replications, the same ones for
        // both systems since they share arrival epochs.
        let mut rng = child(controls.seed, &[TAG_BOOTSTRAP, i as u64]);
        let mut diffs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| {
                let picks: Vec<usize> = (0..runs.len())
                    .map(|_| rng.random_range(0..runs.len()))
                    .collect();
                pooled(0, &picks, lq) - pooled(1, &picks, lq)
            })
            .collect();
        sort_f64(&mut diffs);
        let alpha = (1.0 - controls.confidence) / 2.0;
        let lo = quantile_sorted(&diffs, alpha);
        out.push(TailLevel {
            q: lq,
            base: pooled(0, &all, lq),
            replicated: pooled(1, &all, lq),
            diff_lo: lo,
            diff_hi: quantile_sorted(&diffs, 1.0 - alpha),
            improved: lo > 0.0,
        });
    }
    Ok(TailCheck {
        load,
        improved: out.iter().all(|l| l.improved),
        levels: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadCell {
    pub overhead: f64,
    pub load: f64,
    pub delta_mean: f64,
    pub half_width: Option<f64>,
    pub replications: usize,
}

/// Δ on an (overhead, load) grid; overheads are in mean service times.
pub fn overhead_sweep(
    dist: &ServiceDistribution,
    k: usize,
    n_servers: usize,
    overheads: &[f64],
    loads: &[f64],
    controls: &SearchControls,
) -> Result<Vec<OverheadCell>> {
    if let Some(c) = overheads.iter().find(|c| !(**c >= 0.0)) {
        return Err(invalid("overhead", format!("{c} must be >= 0")));
    }
    let cells: Vec<(f64, f64)> = overheads
        .iter()
        .flat_map(|&c| loads.iter().map(move |&l| (c, l)))
        .collect();
    cells
        .par_iter()
        .map(|&(overhead, load)| {
            let p = probe_delta(dist, k, n_servers, overhead, load, controls)?;
            Ok(OverheadCell {
                overhead,
                load,
                delta_mean: p.delta,
                half_width: p.half_width,
                replications: p.replications,
            })
        })
        .collect()
}

/// Smallest overhead on the grid at which Δ > 0 (point estimate) at every
/// load; None if replication still helps somewhere at every overhead.
pub fn negating_overhead(cells: &[OverheadCell]) -> Option<f64> {
    let mut overheads: Vec<f64> = cells.iter().map(|c| c.overhead).collect();
    sort_f64(&mut overheads);
    overheads.dedup();
    overheads.into_iter().find(|&c| {
        cells
            .iter()
            .filter(|x| x.overhead == c)
            .all(|x| x.delta_mean > 0.0)
    })
}

pub fn overhead_csv(cells: &[OverheadCell]) -> String {
    let mut out = String::from("overhead,load,delta_mean,half_width\n");
    for c in cells {
        let hw = c.half_width.map(|h| h.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", c.overhead, c.load, c.delta_mean, hw));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SearchControls {
        SearchControls {
            n_requests: 20_000,
            min_replications: 4,
            max_replications: 8,
            batch: 4,
            tolerance: 0.01,
            ..SearchControls::default()
        }
    }

    #[test]
    fn baseline_mode_resolution() {
        let heavy = ServiceDistribution::pareto(2.5).unwrap();
        let light = ServiceDistribution::pareto(4.0).unwrap();
        assert_eq!(BaselineMode::Auto.resolve(&heavy), BaselineMode::Exact);
        assert_eq!(BaselineMode::Auto.resolve(&light), BaselineMode::Simulated);
        assert_eq!(
            BaselineMode::Auto.resolve(&ServiceDistribution::exponential()),
            BaselineMode::Simulated
        );
        assert_eq!(BaselineMode::Simulated.resolve(&heavy), BaselineMode::Simulated);
    }

    #[test]
    fn rejects_bad_requests() {
        let d = ServiceDistribution::exponential();
        assert!(find_threshold(&d, 1, 20, 0.0, &quick()).is_err());
        assert!(find_threshold(&d, 3, 2, 0.0, &quick()).is_err());
        let bad = SearchControls {
            min_replications: 1,
            ..quick()
        };
        assert!(find_threshold(&d, 2, 20, 0.0, &bad).is_err());
        assert!(family_member(Family::Exponential, 1.0).is_err());
        assert!(tail_improvement_check(&d, 2, 20, 0.2, 1.0, None, &quick()).is_err());
        assert!(overhead_sweep(&d, 2, 20, &[-0.1], &[0.1], &quick()).is_err());
    }

    #[test]
    fn crossing_fit_recovers_a_line() {
        let probes: Vec<Probe> = [0.30, 0.32, 0.33, 0.34, 0.36]
            .iter()
            .map(|&l| Probe {
                load: l,
                delta: 5.0 * (l - 0.333),
                half_width: Some(0.01),
                replications: 10,
                resolved: false,
            })
            .collect();
        let root = crossing(&probes, &probes[2], &probes[3], 0.01);
        assert!((root - 0.333).abs() < 1e-9);
    }

    #[test]
    fn infinite_variance_baseline_always_loses() {
        let d = ServiceDistribution::pareto(1.8).unwrap();
        let p = probe_delta(&d, 2, 10, 0.0, 0.1, &quick()).unwrap();
        assert!(p.delta == f64::NEG_INFINITY && p.resolved);
    }

    #[test]
    fn exponential_search_is_deterministic_and_bracketed() {
        let d = ServiceDistribution::exponential();
        let a = find_threshold(&d, 2, 20, 0.0, &quick()).unwrap();
        let b = find_threshold(&d, 2, 20, 0.0, &quick()).unwrap();
        assert_eq!(a, b);
        assert!(a.threshold > 0.0 && a.threshold + a.half_width <= 0.5);
        assert!(a.half_width <= 0.01);
        assert!((a.threshold - 1.0 / 3.0).abs() < 0.03, "{a:?}");
        assert!(a.consistent);
        assert_eq!(a.n_probes, a.evidence.len());
    }

    #[test]
    fn huge_overhead_gives_zero_threshold() {
        let d = ServiceDistribution::exponential();
        let est = find_threshold(&d, 2, 10, 2.0, &quick()).unwrap();
        assert_eq!(est.threshold, 0.0);
        assert!(est.half_width > 0.0 && est.half_width < 0.02);
    }

    #[test]
    fn tail_levels_default() {
        assert_eq!(tail_levels(0.92), vec![0.92, 0.96, 0.99, 0.999]);
        assert_eq!(tail_levels(0.99), vec![0.99, 0.995, 0.999]);
        assert_eq!(tail_levels(0.999), vec![0.999, 0.9995]);
    }

    #[test]
    fn negating_overhead_picks_first_all_positive_row() {
        let cell = |c, l, d| OverheadCell {
            overhead: c,
            load: l,
            delta_mean: d,
            half_width: None,
            replications: 1,
        };
        let cells = vec![
            cell(0.0, 0.1, -1.0),
            cell(0.0, 0.2, -0.5),
            cell(0.1, 0.1, 0.2),
            cell(0.1, 0.2, -0.1),
            cell(0.2, 0.1, 0.3),
            cell(0.2, 0.2, 0.1),
        ];
        assert_eq!(negating_overhead(&cells), Some(0.2));
        assert_eq!(negating_overhead(&cells[..4]), None);
        assert!(overhead_csv(&cells).starts_with("overhead,load,delta_mean,half_width\n"));
    }

    #[test]
    fn study_is_reproducible_and_support_one_is_deterministic() {
        let config = StudyConfig {
            support_sizes: vec![1, 3],
            schemes: vec![SimplexScheme::UniformSimplex, SimplexScheme::Dirichlet01],
            n_samples: 2,
            k: 2,
            n_servers: 10,
            master_seed: 9,
            controls: quick(),
        };
        let a = random_distribution_study(&config).unwrap();
        let b = random_distribution_study(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for cell in &a[..2] {
            for s in &cell.samples {
                assert_eq!(s.distribution.atoms(), Some(vec![(1.0, 1.0)]));
                assert_eq!(s.scv, 0.0);
            }
        }
        for cell in &a {
            assert!(cell.min <= cell.max && cell.max < 0.5);
        }
        assert!(study_summary_csv(&a).lines().count() == 5);
    }
}
