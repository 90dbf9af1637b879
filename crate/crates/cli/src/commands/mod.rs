pub mod calc;
pub mod dns;
pub mod sim;

use redundancy_core::ServiceDistribution;

use crate::args::Preset;
use crate::error::{usage, Result};

/// What a command prints on stdout once its artifacts are written.
pub struct Outcome {
    pub stdout: String,
}

impl Outcome {
    pub fn json<T: serde::Serialize>(value: &T) -> Result<Self> {
        Ok(Outcome {
            stdout: serde_json::to_string_pretty(value)? + "\n",
        })
    }

    pub fn text(stdout: String) -> Self {
        Outcome { stdout }
    }
}

pub fn parse_dist(spec: Option<&str>, default: &str) -> Result<ServiceDistribution> {
    Ok(spec.unwrap_or(default).parse::<ServiceDistribution>()?)
}

pub fn check_preset(preset: Option<Preset>, command: &str) -> Result<Option<Preset>> {
    match preset {
        Some(p) if p.command() != command => Err(usage(format!(
            "--preset {} applies to `{}`, not `{command}`",
            p.name(),
            p.command()
        ))),
        other => Ok(other),
    }
}

/// Loads spread over the stable range of k-way replication.
pub fn default_loads(k: usize) -> Vec<f64> {
    (1..=9).map(|i| round6(i as f64 * 0.1 / k as f64)).collect()
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
