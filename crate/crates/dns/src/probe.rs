//! Sending one query to several resolvers and timing the first answer.

use std::fmt;
use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::str::FromStr;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};

use redundancy_core::rng::{child, StreamRng};

use crate::delay::DelayLaw;
use crate::error::{io_err, DnsError, Result};
use crate::wire::{build_query, is_valid_response, parse_name};

/// Queries slower than this count as lost and are recorded at this value.
pub const LOSS_MS: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolverSpec {
    pub label: String,
    pub address: SocketAddr,
}

/// Which resolvers a trial queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// One resolver, by its index in the resolver list.
    Single(usize),
    /// The `m` best-ranked resolvers at once.
    Parallel(usize),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Single(i) => write!(f, "single:{i}"),
            Strategy::Parallel(m) => write!(f, "parallel:{m}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = DnsError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || DnsError::Config(format!("strategy `{s}`: expected single:I or parallel:M"));
        let (kind, n) = s.trim().split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        match kind {
            "single" => Ok(Strategy::Single(n)),
            "parallel" if n >= 1 => Ok(Strategy::Parallel(n)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = DnsError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    /// First valid response, capped at the loss value.
    pub latency_ms: f64,
    pub lost: bool,
    /// Each target's own response time, when it answered in time and was
    /// observed.
    pub per_target: Vec<Option<f64>>,
    /// Valid responses that arrived after the first.
    pub late_responses: usize,
}

impl ProbeOutcome {
    fn from_times(per_target: Vec<Option<f64>>, timeout_ms: f64) -> Self {
        let first = per_target
            .iter()
            .flatten()
            .copied()
            .filter(|&t| t <= timeout_ms)
            .fold(f64::INFINITY, f64::min);
        let lost = !first.is_finite();
        let answered = per_target.iter().flatten().count();
        ProbeOutcome {
            latency_ms: if lost { LOSS_MS } else { first.min(LOSS_MS) },
            lost,
            late_responses: answered.saturating_sub(usize::from(!lost)),
            per_target,
        }
    }
}

/// Anything that can time a query against a subset of resolvers.
pub trait Prober {
    fn resolver_count(&self) -> usize;

    /// Query `name` at the resolvers with indices `targets` concurrently.
    fn probe(&mut self, name: &str, targets: &[usize]) -> Result<ProbeOutcome>;

    /// Wait between trials.
    fn pause(&mut self, gap: Duration);

    /// Trial timestamp, milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;
}

/// Live prober over UDP.
pub struct UdpProber {
    resolvers: Vec<ResolverSpec>,
    timeout: Duration,
    /// Keep listening after the first answer until every target has
    /// answered or the timeout passes, so per-target times are complete.
    wait_all: bool,
    ids: StreamRng,
}

impl UdpProber {
    pub fn new(resolvers: Vec<ResolverSpec>, timeout: Duration, seed: u64) -> Result<Self> {
        if resolvers.is_empty() {
            return Err(DnsError::Config("no resolvers given".into()));
        }
        Ok(UdpProber {
            resolvers,
            timeout,
            wait_all: false,
            ids: child(seed, &[0x1D]),
        })
    }

    pub fn wait_for_all(mut self, yes: bool) -> Self {
        self.wait_all = yes;
        self
    }

    pub fn resolvers(&self) -> &[ResolverSpec] {
        &self.resolvers
    }
}

impl Prober for UdpProber {
    fn resolver_count(&self) -> usize {
        self.resolvers.len()
    }

    fn probe(&mut self, name: &str, targets: &[usize]) -> Result<ProbeOutcome> {
        check_targets(targets, self.resolvers.len())?;
        let addrs: Vec<SocketAddr> = targets.iter().map(|&i| self.resolvers[i].address).collect();
        if addrs.iter().any(|a| a.is_ipv4() != addrs[0].is_ipv4()) {
            return Err(DnsError::Config("cannot mix IPv4 and IPv6 resolvers in one trial".into()));
        }
        let bind: SocketAddr = if addrs[0].is_ipv4() {
            ([0, 0, 0, 0], 0).into()
        } else {
            ([0u16; 8], 0).into()
        };
        let socket = UdpSocket::bind(bind).map_err(io_err("binding query socket"))?;
        let id: u16 = self.ids.random();
        let query = build_query(id, name)?;
        let start = Instant::now();
        for a in &addrs {
            socket
                .send_to(&query, a)
                .map_err(io_err(format!("sending query to {a}")))?;
        }
        let mut times: Vec<Option<f64>> = vec![None; addrs.len()];
        let mut buf = [0u8; 4096];
        loop {
            let elapsed = start.elapsed();
            if elapsed >= self.timeout {
                break;
            }
            socket
                .set_read_timeout(Some(self.timeout - elapsed))
                .map_err(io_err("setting socket timeout"))?;
            match socket.recv_from(&mut buf) {
                Ok((n, from)) => {
                    let t = start.elapsed().as_secs_f64() * 1000.0;
                    if !is_valid_response(&buf[..n], id) {
                        continue;
                    }
                    for (slot, a) in times.iter_mut().zip(&addrs) {
                        if *a == from && slot.is_none() {
                            *slot = Some(t);
                            break;
                        }
                    }
                    let done = if self.wait_all {
                        times.iter().all(Option::is_some)
                    } else {
                        times.iter().any(Option::is_some)
                    };
                    if done {
                        break;
                    }
                }
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => break,
                // ICMP port-unreachable surfaces as a receive error: that
                // resolver will not answer, but others still might.
                Err(e) if e.kind() == ErrorKind::ConnectionRefused => continue,
                Err(e) => return Err(io_err("receiving response")(e)),
            }
        }
        Ok(ProbeOutcome::from_times(times, self.timeout.as_secs_f64() * 1000.0))
    }

    fn pause(&mut self, gap: Duration) {
        if !gap.is_zero() {
            std::thread::sleep(gap);
        }
    }

    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

fn check_targets(targets: &[usize], n: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(DnsError::Config("a trial needs at least one resolver".into()));
    }
    if let Some(&i) = targets.iter().find(|&&i| i >= n) {
        return Err(DnsError::Config(format!("resolver index {i} out of range (have {n})")));
    }
    Ok(())
}

/// Resolver behaviour for the virtual prober.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualResolver {
    pub delay: DelayLaw,
    pub drop_probability: f64,
}

/// Draws response times from scripted laws instead of touching the network;
/// time advances on a virtual clock.
pub struct SimulatedProber {
    resolvers: Vec<VirtualResolver>,
    timeout_ms: f64,
    rng: StreamRng,
    clock_ms: u64,
}

impl SimulatedProber {
    pub fn new(resolvers: Vec<VirtualResolver>, timeout_ms: f64, seed: u64) -> Result<Self> {
        if resolvers.is_empty() {
            return Err(DnsError::Config("no resolvers given".into()));
        }
        Ok(SimulatedProber {
            resolvers,
            timeout_ms,
            rng: child(seed, &[0x51A]),
            clock_ms: 0,
        })
    }
}

impl Prober for SimulatedProber {
    fn resolver_count(&self) -> usize {
        self.resolvers.len()
    }

    fn probe(&mut self, name: &str, targets: &[usize]) -> Result<ProbeOutcome> {
        parse_name(name)?;
        check_targets(targets, self.resolvers.len())?;
        let times = targets
            .iter()
            .map(|&i| {
                let r = self.resolvers[i];
                let dropped = self.rng.random::<f64>() < r.drop_probability;
                let t = r.delay.sample(&mut self.rng);
                (!dropped && t <= self.timeout_ms).then_some(t)
            })
            .collect();
        Ok(ProbeOutcome::from_times(times, self.timeout_ms))
    }

    fn pause(&mut self, gap: Duration) {
        self.clock_ms += gap.as_millis() as u64;
    }

    fn now_ms(&self) -> u64 {
        self.clock_ms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_text() {
        for s in [Strategy::Single(3), Strategy::Parallel(10)] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("parallel:0".parse::<Strategy>().is_err());
        assert!("both:1".parse::<Strategy>().is_err());
    }

    #[test]
    fn outcome_from_times() {
        let o = ProbeOutcome::from_times(vec![Some(30.0), None, Some(12.0)], 2000.0);
        assert_eq!((o.latency_ms, o.lost, o.late_responses), (12.0, false, 1));
        let lost = ProbeOutcome::from_times(vec![None, None], 2000.0);
        assert_eq!((lost.latency_ms, lost.lost), (LOSS_MS, true));
        let slow = ProbeOutcome::from_times(vec![Some(2500.0)], 3000.0);
        assert_eq!(slow.latency_ms, LOSS_MS);
    }

    #[test]
    fn simulated_min_and_drops() {
        let fixed = |ms| VirtualResolver {
            delay: DelayLaw::Fixed(ms),
            drop_probability: 0.0,
        };
        let mut p = SimulatedProber::new(vec![fixed(10.0), fixed(50.0)], 2000.0, 1).unwrap();
        let o = p.probe("a.test", &[0, 1]).unwrap();
        assert_eq!(o.latency_ms, 10.0);
        assert_eq!(o.per_target, vec![Some(10.0), Some(50.0)]);
        let dead = VirtualResolver {
            drop_probability: 1.0,
            ..fixed(1.0)
        };
        let mut p = SimulatedProber::new(vec![dead, dead], 2000.0, 1).unwrap();
        let o = p.probe("a.test", &[0, 1]).unwrap();
        assert!(o.lost && o.latency_ms == LOSS_MS);
        assert!(p.probe("a.test", &[2]).is_err());
        assert!(p.probe("a.test", &[]).is_err());
    }
}
