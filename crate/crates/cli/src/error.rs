use thiserror::Error;

use redundancy_core::Error as CoreError;
use redundancy_dns::DnsError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or a configuration the models reject; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while running; exit status 1.
    #[error("{0}")]
    Runtime(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Flag that sets a model parameter, for error messages.
fn flag_for(param: &str) -> Option<&'static str> {
    Some(match param {
        "n_servers" => "--n",
        "replication" | "k" => "--k",
        "base_load" | "load" => "--load",
        "client_overhead" | "overhead" => "--overhead",
        "n_requests" => "--requests",
        "warmup_fraction" => "--warmup",
        "replications" => "--replications",
        "min_replications" => "--min-reps",
        "max_replications" => "--max-reps",
        "batch" => "--batch",
        "tolerance" => "--tolerance",
        "confidence" => "--confidence",
        "quantile_levels" => "--quantiles",
        "q" => "--q",
        "levels" => "--levels",
        "n_samples" => "--samples",
        "support_sizes" => "--support",
        "scheme" => "--schemes",
        "scv" => "--scv",
        "mean_base" => "--mean-base",
        "rtt_ms" => "--rtt-ms",
        "p_single" => "--p-single",
        "p_dup" => "--p-dup",
        "syn_rto_ms" => "--syn-rto-ms",
        "synack_rto_ms" => "--synack-rto-ms",
        "backoff_factor" => "--backoff",
        "cost_per_gb" => "--plans",
        "dollars_per_hour" => "--values",
        "extra_bytes" => "--extra-bytes",
        _ => return None,
    })
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidParameter { name, .. } => match flag_for(name) {
                Some(flag) => CliError::Usage(format!("{flag}: {e}")),
                None => CliError::Usage(e.to_string()),
            },
            CoreError::Unstable { .. } => CliError::Usage(format!("--load/--k: {e}")),
            CoreError::ParseSpec { .. } => CliError::Usage(format!("--dist: {e}")),
            CoreError::Unresolvable { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DnsError> for CliError {
    fn from(e: DnsError) -> Self {
        match e {
            DnsError::Io { .. } | DnsError::Csv(_) | DnsError::Encode(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
