//! Completion time of an idealized three-packet TCP handshake under
//! independent packet loss, with retransmission timeouts and exponential
//! backoff, with and without sending every packet twice.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandshakeParams {
    pub rtt_ms: f64,
    /// Loss probability of a single packet.
    pub p_single: f64,
    /// Probability that both copies of a duplicated packet are lost.
    pub p_dup: f64,
    pub syn_rto_ms: f64,
    pub synack_rto_ms: f64,
    pub backoff_factor: f64,
    /// Retries enumerated per packet; deeper paths go to the residual.
    pub max_retries: u32,
}

impl HandshakeParams {
    pub fn new(rtt_ms: f64) -> Self {
        HandshakeParams {
            rtt_ms,
            p_single: 0.0048,
            p_dup: 0.0007,
            syn_rto_ms: 3000.0,
            synack_rto_ms: 3000.0,
            backoff_factor: 2.0,
            max_retries: 6,
        }
    }

    pub fn with_loss(mut self, p_single: f64, p_dup: f64) -> Self {
        self.p_single = p_single;
        self.p_dup = p_dup;
        self
    }

    pub fn ack_rto_ms(&self) -> f64 {
        3.0 * self.rtt_ms
    }

    fn rtos(&self) -> [f64; 3] {
        [self.syn_rto_ms, self.synack_rto_ms, self.ack_rto_ms()]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtt_ms >= 0.0 && self.rtt_ms.is_finite()) {
            return Err(invalid("rtt_ms", format!("{} must be >= 0", self.rtt_ms)));
        }
        if !(0.0..1.0).contains(&self.p_single) {
            return Err(invalid("p_single", format!("{} outside [0, 1)", self.p_single)));
        }
        if !(self.p_dup >= 0.0 && self.p_dup <= self.p_single) {
            return Err(invalid(
                "p_dup",
                format!("{} must lie in [0, p_single = {}]", self.p_dup, self.p_single),
            ));
        }
        if !(self.syn_rto_ms > 0.0 && self.synack_rto_ms > 0.0) {
            return Err(invalid("rto", "timeouts must be positive"));
        }
        if !(self.backoff_factor >= 1.0) {
            return Err(invalid("backoff_factor", "must be >= 1"));
        }
        if self.max_retries < 1 {
            return Err(invalid("max_retries", "must be >= 1"));
        }
        Ok(())
    }

    fn loss(&self, duplicated: bool) -> f64 {
        if duplicated {
            self.p_dup
        } else {
            self.p_single
        }
    }
}

/// Time spent waiting on timeouts before the `retries`-th retransmission
/// gets through.
fn backoff_delay(rto: f64, factor: f64, retries: u32) -> f64 {
    (0..retries).map(|j| rto * factor.powi(j as i32)).sum()
}

/// Exact completion-time law, truncated at `max_retries` per packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshakeDistribution {
    /// (completion ms, probability), ascending in time.
    pub atoms: Vec<(f64, f64)>,
    /// Probability of paths with more than `max_retries` retries on some
    /// packet.
    pub residual: f64,
}

impl HandshakeDistribution {
    /// Mean over the enumerated paths (a lower bound on the true mean, off by
    /// at most the residual mass times the truncated tail).
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(t, p)| t * p).sum()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|(x, _)| *x <= t)
            .map(|(_, p)| p)
            .sum()
    }

    /// Smallest t with CDF(t) >= q; levels reaching into the residual are
    /// rejected.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("q", format!("{q} outside (0, 1)")));
        }
        if q > 1.0 - self.residual {
            return Err(Error::Unresolvable {
                q,
                residual: self.residual,
            });
        }
        let mut acc = 0.0;
        for &(t, p) in &self.atoms {
            acc += p;
            if acc >= q - 1e-15 {
                return Ok(t);
            }
        }
        Err(Error::Unresolvable {
            q,
            residual: self.residual,
        })
    }
}

pub fn handshake_distribution(
    params: &HandshakeParams,
    duplicated: bool,
) -> Result<HandshakeDistribution> {
    params.validate()?;
    let p = params.loss(duplicated);
    let half = params.rtt_ms / 2.0;
    let per_packet = |rto: f64| -> Vec<(f64, f64)> {
        (0..=params.max_retries)
            .map(|r| {
                let t = half + backoff_delay(rto, params.backoff_factor, r);
                (t, (1.0 - p) * p.powi(r as i32))
            })
            .collect()
    };
    let mut acc = vec![(0.0, 1.0)];
    for rto in params.rtos() {
        let step = per_packet(rto);
        let mut next = Vec::with_capacity(acc.len() * step.len());
        for &(t0, p0) in &acc {
            for &(t1, p1) in &step {
                next.push((t0 + t1, p0 * p1));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        acc = merge_equal_times(next);
    }
    acc.retain(|&(_, w)| w > 0.0);
    let tail = p.powi(params.max_retries as i32 + 1);
    let residual = 1.0 - (1.0 - tail).powi(3);
    Ok(HandshakeDistribution {
        atoms: acc,
        residual,
    })
}

fn merge_equal_times(sorted: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (t, w) in sorted {
        match out.last_mut() {
            Some(last) if (t - last.0).abs() <= 1e-9 * t.abs().max(1.0) => last.1 += w,
            _ => out.push((t, w)),
        }
    }
    out
}

/// Mean saving predicted by charging every lost packet only its first
/// timeout.
pub fn first_order_saving(params: &HandshakeParams) -> Result<f64> {
    params.validate()?;
    let total_rto: f64 = params.rtos().iter().sum();
    Ok(total_rto * (params.p_single - params.p_dup))
}

pub fn mean_saving(params: &HandshakeParams) -> Result<f64> {
    Ok(handshake_distribution(params, false)?.mean() - handshake_distribution(params, true)?.mean())
}

pub fn quantile_saving(params: &HandshakeParams, q: f64) -> Result<f64> {
    let undup = handshake_distribution(params, false)?.quantile(q)?;
    let dup = handshake_distribution(params, true)?.quantile(q)?;
    Ok(undup - dup)
}

/// Monte Carlo estimate of the mean completion time with untruncated retries.
pub fn monte_carlo_mean(
    params: &HandshakeParams,
    duplicated: bool,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    params.validate()?;
    if trials < 2 {
        return Err(invalid("trials", "need at least two trials"));
    }
    const SHARD: usize = 1 << 16;
    let p = params.loss(duplicated);
    let shards = trials.div_ceil(SHARD);
    let sums: Vec<(f64, f64, usize)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::child(seed, &[duplicated as u64, s as u64]);
            let n = SHARD.min(trials - s * SHARD);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..n {
                let mut t = 0.0;
                for rto in params.rtos() {
                    let mut r = 0;
                    while rng.random::<f64>() < p {
                        r += 1;
                    }
                    t += params.rtt_ms / 2.0 + backoff_delay(rto, params.backoff_factor, r);
                }
                sum += t;
                sq += t * t;
            }
            (sum, sq, n)
        })
        .collect();
    let (sum, sq, n) = sums
        .iter()
        .fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = sum / n as f64;
    let var = (sq / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    Ok(Estimate {
        mean,
        half_width: Some(3.0 * (var / n as f64).sqrt()),
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSaving {
    pub q: f64,
    pub undup_ms: f64,
    pub dup_ms: f64,
    pub saving_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshakeReport {
    pub params: HandshakeParams,
    pub mean_undup: f64,
    pub mean_dup: f64,
    pub mean_saving: f64,
    pub first_order_saving: f64,
    pub quantile_savings: Vec<QuantileSaving>,
    pub residual_mass: f64,
}

pub fn report(params: &HandshakeParams, quantiles: &[f64]) -> Result<HandshakeReport> {
    let undup = handshake_distribution(params, false)?;
    let dup = handshake_distribution(params, true)?;
    let quantile_savings = quantiles
        .iter()
        .map(|&q| {
            let u = undup.quantile(q)?;
            let d = dup.quantile(q)?;
            Ok(QuantileSaving {
                q,
                undup_ms: u,
                dup_ms: d,
                saving_ms: u - d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HandshakeReport {
        params: *params,
        mean_undup: undup.mean(),
        mean_dup: dup.mean(),
        mean_saving: undup.mean() - dup.mean(),
        first_order_saving: first_order_saving(params)?,
        quantile_savings,
        residual_mass: undup.residual.max(dup.residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_is_a_point_mass() {
        let params = HandshakeParams::new(80.0).with_loss(0.0, 0.0);
        let d = handshake_distribution(&params, false).unwrap();
        assert_eq!(d.atoms, vec![(120.0, 1.0)]);
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn probability_of_any_loss() {
        let params = HandshakeParams::new(100.0);
        let d = handshake_distribution(&params, false).unwrap();
        let expected = 1.0 - (1.0 - 0.0048_f64).powi(3);
        assert!((1.0 - d.residual - d.cdf(150.0) - expected).abs() < 1e-12);
        assert!((expected - 0.01434).abs() < 1e-5);
    }

    #[test]
    fn enumeration_mean_matches_geometric_closed_form() {
        // With doubling backoff each packet's expected timeout wait is
        // rto · Σ_r (2^r − 1)(1−p)p^r = rto · p/(1−2p).
        let params = HandshakeParams::new(100.0);
        let closed = |p: f64| 150.0 + 6300.0 * p / (1.0 - 2.0 * p);
        let undup = handshake_distribution(&params, false).unwrap();
        let dup = handshake_distribution(&params, true).unwrap();
        assert!((undup.mean() - closed(0.0048)).abs() < 1e-9);
        assert!((dup.mean() - closed(0.0007)).abs() < 1e-9);
        let saving = mean_saving(&params).unwrap();
        assert!((saving - 26.115).abs() < 0.01, "{saving}");
        assert!((saving - 25.8).abs() / 25.8 < 0.02);
    }

    #[test]
    fn first_order_values() {
        let params = HandshakeParams::new(100.0);
        assert!((first_order_saving(&params).unwrap() - 25.83).abs() < 1e-9);
        let zero = HandshakeParams::new(0.0);
        assert!((first_order_saving(&zero).unwrap() - 24.6).abs() < 1e-9);
        let same = HandshakeParams::new(100.0).with_loss(0.003, 0.003);
        assert_eq!(first_order_saving(&same).unwrap(), 0.0);
        let exact = mean_saving(&params).unwrap();
        assert!((exact - 25.83).abs() / 25.83 < 0.1);
    }

    #[test]
    fn masses_and_residual() {
        let params = HandshakeParams::new(100.0);
        for dup in [false, true] {
            let d = handshake_distribution(&params, dup).unwrap();
            let total: f64 = d.atoms.iter().map(|a| a.1).sum();
            assert!((total - (1.0 - d.residual)).abs() < 1e-12);
            assert!(d.residual < 1e-9);
            assert!(d.atoms.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn quantile_savings() {
        let params = HandshakeParams::new(100.0);
        assert_eq!(quantile_saving(&params, 0.5).unwrap(), 0.0);
        let same = HandshakeParams::new(100.0).with_loss(0.01, 0.01);
        for q in [0.5, 0.9, 0.99, 0.999, 0.9999] {
            assert_eq!(quantile_saving(&same, q).unwrap(), 0.0);
        }
        let undup = handshake_distribution(&params, false).unwrap();
        assert_eq!(undup.quantile(0.999).unwrap(), 3150.0);
        assert!(quantile_saving(&params, 1.0).is_err());
        let shallow = HandshakeParams {
            max_retries: 1,
            ..HandshakeParams::new(100.0).with_loss(0.3, 0.1)
        };
        let d = handshake_distribution(&shallow, false).unwrap();
        assert!(matches!(
            d.quantile(1.0 - d.residual / 2.0),
            Err(Error::Unresolvable { .. })
        ));
    }

    #[test]
    fn duplication_dominates() {
        let params = HandshakeParams::new(60.0).with_loss(0.05, 0.01);
        let undup = handshake_distribution(&params, false).unwrap();
        let dup = handshake_distribution(&params, true).unwrap();
        for &(t, _) in undup.atoms.iter().chain(dup.atoms.iter()) {
            assert!(dup.cdf(t) >= undup.cdf(t) - 1e-12);
        }
    }

    #[test]
    fn monte_carlo_agrees() {
        let params = HandshakeParams::new(100.0);
        for dup in [false, true] {
            let exact = handshake_distribution(&params, dup).unwrap().mean();
            let mc = monte_carlo_mean(&params, dup, 1_000_000, 3).unwrap();
            assert!((mc.mean - exact).abs() <= mc.hw(), "{mc:?} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(HandshakeParams::new(100.0).with_loss(0.001, 0.002).validate().is_err());
        assert!(HandshakeParams::new(-1.0).validate().is_err());
        assert!(HandshakeParams::new(100.0).with_loss(1.0, 0.0).validate().is_err());
    }
}
