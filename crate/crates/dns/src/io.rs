//! Resolver lists, name corpora and trial logs on disk.

use std::fs;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyze::Report;
use crate::campaign::TrialRecord;
use crate::error::{io_err, DnsError, Result};
use crate::probe::{ResolverSpec, Strategy};
use crate::wire::parse_name;

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// One `label,ip:port` per line; blank lines and `#` comments are skipped.
pub fn parse_resolvers(text: &str) -> Result<Vec<ResolverSpec>> {
    let parse_err = |line, reason: String| DnsError::Parse {
        what: "resolver list",
        line,
        reason,
    };
    let out: Vec<ResolverSpec> = lines(text)
        .map(|(n, l)| {
            let (label, addr) = l
                .rsplit_once(',')
                .ok_or_else(|| parse_err(n, "expected label,ip:port".into()))?;
            let address: SocketAddr = addr
                .trim()
                .parse()
                .map_err(|e| parse_err(n, format!("address `{}`: {e}", addr.trim())))?;
            Ok(ResolverSpec {
                label: label.trim().to_string(),
                address,
            })
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(DnsError::Config("resolver list is empty".into()));
    }
    Ok(out)
}

pub fn format_resolvers(resolvers: &[ResolverSpec]) -> String {
    resolvers
        .iter()
        .map(|r| format!("{},{}\n", r.label, r.address))
        .collect()
}

/// One domain name per line, each checked for syntax.
pub fn parse_corpus(text: &str) -> Result<Vec<String>> {
    let out: Vec<String> = lines(text)
        .map(|(n, l)| {
            parse_name(l).map_err(|e| DnsError::Parse {
                what: "name corpus",
                line: n,
                reason: e.to_string(),
            })?;
            Ok(l.to_string())
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(DnsError::Config("name corpus is empty".into()));
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))
}

pub fn read_resolvers(path: &Path) -> Result<Vec<ResolverSpec>> {
    parse_resolvers(&read_text(path)?)
}

pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    parse_corpus(&read_text(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialRow {
    timestamp: u64,
    name: String,
    strategy: Strategy,
    latency_ms: f64,
    lost: bool,
}

/// CSV with columns `timestamp,name,strategy,latency_ms,lost`.
pub fn write_trials<W: Write>(out: W, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in trials {
        w.serialize(TrialRow {
            timestamp: t.timestamp_ms,
            name: t.name.clone(),
            strategy: t.strategy,
            latency_ms: t.latency_ms,
            lost: t.lost,
        })?;
    }
    w.flush().map_err(io_err("writing trial log"))?;
    Ok(())
}

pub fn read_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<TrialRow>()
        .map(|row| {
            let row = row?;
            Ok(TrialRecord {
                timestamp_ms: row.timestamp,
                name: row.name,
                strategy: row.strategy,
                latency_ms: row.latency_ms,
                lost: row.lost,
                targets: vec![],
                per_resolver: vec![],
            })
        })
        .collect()
}

pub fn save_trials(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    let f = fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
    write_trials(std::io::BufWriter::new(f), trials)
}

pub fn load_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let f = fs::File::open(path).map_err(io_err(format!("opening {}", path.display())))?;
    read_trials(std::io::BufReader::new(f))
}

/// Per-strategy table: `strategy,trials,lost,mean_ms,frac_over_500ms,frac_over_1500ms`.
pub fn strategy_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &report.strategies {
        w.serialize(s)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| DnsError::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| DnsError::Encode(e.to_string()))
}
