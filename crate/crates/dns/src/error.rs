use thiserror::Error;

#[derive(Debug, Error)]
pub enum DnsError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid query name `{name}`: {reason}")]
    InvalidName { name: String, reason: String },

    #[error("{what}, line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("DNS message encoding failed: {0}")]
    Encode(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DnsError>;

pub(crate) fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> DnsError {
    let context = context.into();
    move |source| DnsError::Io { context, source }
}
