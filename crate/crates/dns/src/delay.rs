//! Scripted response-delay laws for mock resolvers, in milliseconds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DnsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DelayLaw {
    Fixed(f64),
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `shift` plus an exponential with mean `mean`.
    ShiftedExponential { shift: f64, mean: f64 },
}

impl DelayLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let exp = |rng: &mut R, mean: f64| -mean * (1.0 - rng.random::<f64>()).ln();
        match *self {
            DelayLaw::Fixed(ms) => ms,
            DelayLaw::Exponential { mean } => exp(rng, mean),
            DelayLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DelayLaw::ShiftedExponential { shift, mean } => shift + exp(rng, mean),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            DelayLaw::Fixed(ms) => f64::from(u8::from(t >= ms)),
            DelayLaw::Exponential { mean } => (1.0 - (-t / mean).exp()).max(0.0),
            DelayLaw::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            DelayLaw::ShiftedExponential { shift, mean } => {
                (1.0 - (-(t - shift) / mean).exp()).max(0.0)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DelayLaw::Fixed(ms) => ms,
            DelayLaw::Exponential { mean } => mean,
            DelayLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            DelayLaw::ShiftedExponential { shift, mean } => shift + mean,
        }
    }

    fn validate(self) -> Result<Self, String> {
        let ok = match self {
            DelayLaw::Fixed(ms) => ms >= 0.0,
            DelayLaw::Exponential { mean } => mean > 0.0,
            DelayLaw::Uniform { lo, hi } => lo >= 0.0 && hi > lo,
            DelayLaw::ShiftedExponential { shift, mean } => shift >= 0.0 && mean > 0.0,
        };
        let finite = match self {
            DelayLaw::Fixed(a) | DelayLaw::Exponential { mean: a } => a.is_finite(),
            DelayLaw::Uniform { lo: a, hi: b } | DelayLaw::ShiftedExponential { shift: a, mean: b } => {
                a.is_finite() && b.is_finite()
            }
        };
        if ok && finite {
            Ok(self)
        } else {
            Err(format!("out-of-range parameters in `{self}`"))
        }
    }
}

impl fmt::Display for DelayLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DelayLaw::Fixed(ms) => write!(f, "fixed:{ms}"),
            DelayLaw::Exponential { mean } => write!(f, "exp:{mean}"),
            DelayLaw::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            DelayLaw::ShiftedExponential { shift, mean } => write!(f, "shiftexp:{shift}:{mean}"),
        }
    }
}

impl FromStr for DelayLaw {
    type Err = DnsError;

    /// `fixed:MS`, `exp:MEAN`, `uniform:LO:HI`, `shiftexp:SHIFT:MEAN`.
    fn from_str(s: &str) -> Result<Self, DnsError> {
        let fail = |reason: String| DnsError::Config(format!("delay law `{s}`: {reason}"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
        let nums = parts
            .map(|p| p.trim().parse::<f64>().map_err(|e| fail(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let law = match (kind.as_str(), nums.as_slice()) {
            ("fixed", [ms]) => DelayLaw::Fixed(*ms),
            ("exp" | "exponential", [mean]) => DelayLaw::Exponential { mean: *mean },
            ("uniform", [lo, hi]) => DelayLaw::Uniform { lo: *lo, hi: *hi },
            ("shiftexp", [shift, mean]) => DelayLaw::ShiftedExponential {
                shift: *shift,
                mean: *mean,
            },
            _ => return Err(fail("expected fixed:MS, exp:MEAN, uniform:LO:HI or shiftexp:SHIFT:MEAN".into())),
        };
        law.validate().map_err(fail)
    }
}

impl TryFrom<String> for DelayLaw {
    type Error = DnsError;

    fn try_from(s: String) -> Result<Self, DnsError> {
        s.parse()
    }
}

impl From<DelayLaw> for String {
    fn from(d: DelayLaw) -> String {
        d.to_string()
    }
}
