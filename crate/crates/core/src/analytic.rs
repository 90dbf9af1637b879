//! Closed-form means and the geometric queue-length approximation.
//!
//! Everything is in service-time units (unit-mean service).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Mean response time of an M/M/1 server, optionally with every request
/// replicated to two servers (each then sees load 2ρ and the client keeps the
/// faster of two independent exponential sojourns).
pub fn mm1_mean(load: f64, replicated: bool) -> Result<f64> {
    let limit = if replicated { 0.5 } else { 1.0 };
    if !(load >= 0.0 && load < limit) {
        return Err(invalid("load", format!("{load} outside [0, {limit})")));
    }
    Ok(if replicated {
        1.0 / (2.0 * (1.0 - 2.0 * load))
    } else {
        1.0 / (1.0 - load)
    })
}

/// Load at which two-way replication stops helping with exponential service.
pub fn exponential_threshold() -> f64 {
    1.0 / 3.0
}

/// Pollaczek-Khinchine mean response time of M/G/1 with squared coefficient
/// of variation `scv`.
pub fn two_moment_mean(load: f64, scv: f64) -> Result<f64> {
    if !(load >= 0.0 && load < 1.0) {
        return Err(invalid("load", format!("{load} outside [0, 1)")));
    }
    if !(scv >= 0.0) {
        return Err(invalid("scv", format!("{scv} must be >= 0")));
    }
    Ok(1.0 + load * (1.0 + scv) / (2.0 * (1.0 - load)))
}

/// Geometric number-in-system model matched to the two-moment mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxModel {
    pub scv: f64,
    pub load: f64,
    /// P(number in system >= n) = sigma^n.
    pub sigma: f64,
}

impl ApproxModel {
    pub fn new(scv: f64, load: f64) -> Result<Self> {
        // Little's law: L = λ·W with λ = ρ for unit-mean service.
        let in_system = load * two_moment_mean(load, scv)?;
        Ok(ApproxModel {
            scv,
            load,
            sigma: in_system / (1.0 + in_system),
        })
    }

    pub fn mean_in_system(&self) -> f64 {
        self.sigma / (1.0 - self.sigma)
    }

    /// Approximate mean response without replication.
    pub fn base_mean(&self) -> f64 {
        self.mean_in_system() + 1.0
    }
}

/// Approximate mean response with two-way replication at base load `load`:
/// each server runs at 2ρ and the minimum of two independent geometric
/// queue lengths is geometric with parameter σ².
pub fn approx_replicated_mean(load: f64, scv: f64) -> Result<f64> {
    let s2 = ApproxModel::new(scv, 2.0 * load)?.sigma.powi(2);
    Ok(s2 / (1.0 - s2) + 1.0)
}

/// Crossing load of the approximate base and replicated means.
pub fn geometric_approx_threshold(scv: f64) -> Result<f64> {
    if !(scv >= 0.0 && scv.is_finite()) {
        return Err(invalid("scv", format!("{scv} must be finite and >= 0")));
    }
    let gap = |load: f64| -> f64 {
        let base = ApproxModel::new(scv, load).expect("load < 1").base_mean();
        approx_replicated_mean(load, scv).expect("2·load < 1") - base
    };
    // Replication wins near zero load and loses near 1/2.
    let (mut lo, mut hi) = (0.0_f64, 0.5 - 1e-12);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if gap(lo).abs() <= gap(hi).abs() { lo } else { hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverheadVerdict {
    CannotHelp,
    MayHelp,
}

/// A replicated response is never faster than the client overhead, so an
/// overhead at or above the unreplicated mean rules out any gain.
pub fn overhead_bound(mean_base: f64, overhead: f64) -> Result<OverheadVerdict> {
    if !(mean_base >= 1.0) {
        return Err(invalid("mean_base", format!("{mean_base} must be >= 1")));
    }
    if !(overhead >= 0.0) {
        return Err(invalid("overhead", format!("{overhead} must be >= 0")));
    }
    Ok(if overhead >= mean_base {
        OverheadVerdict::CannotHelp
    } else {
        OverheadVerdict::MayHelp
    })
}
