mod args;
mod commands;
mod error;
mod output;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, DnsCommand};
use commands::{calc, dns, sim, Outcome};
use error::{usage, CliError, Result};
use output::Artifacts;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn parse(argv: &[OsString]) -> Cli {
    // clap prints usage errors itself and exits with status 2.
    Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit())
}

fn run(argv: Vec<OsString>) -> Result<()> {
    let mut cli = parse(&argv);
    let mut argv = argv;
    if let Some(path) = cli.config.clone() {
        argv = merge_config(argv, &path, &cli.command)?;
        cli = parse(&argv);
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs: need at least one worker"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("starting worker pool: {e}")))?;
    }
    let shown: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut art = Artifacts::create(&cli.out, cli.command.name(), shown)?;
    let outcome: Outcome = match cli.command {
        Command::Simulate(a) => sim::simulate(a, &mut art)?,
        Command::Threshold(a) => sim::threshold(a, &mut art)?,
        Command::VarianceSweep(a) => sim::variance(a, &mut art)?,
        Command::RandomStudy(a) => sim::random_study(a, &mut art)?,
        Command::ThresholdVsN(a) => sim::vs_n(a, &mut art)?,
        Command::OverheadSweep(a) => sim::overhead(a, &mut art)?,
        Command::TailCheck(a) => sim::tail(a, &mut art)?,
        Command::Analytic(a) => calc::analytic(a, &mut art)?,
        Command::TcpHandshake(a) => calc::handshake(a, &mut art)?,
        Command::CostBenefit(a) => calc::cost_benefit(a, &mut art)?,
        Command::Dns(DnsCommand::Rank(a)) => dns::rank(a, &mut art)?,
        Command::Dns(DnsCommand::Campaign(a)) => dns::campaign(a, &mut art)?,
        Command::Dns(DnsCommand::Analyze(a)) => dns::analyze_log(a, &mut art)?,
        Command::Dns(DnsCommand::MockServer(a)) => dns::mock_server(a, &mut art)?,
    };
    let dir = art.finish()?;
    print!("{}", outcome.stdout);
    eprintln!("artifacts in {}", dir.display());
    Ok(())
}

/// Insert flags from a JSON config object right after the subcommand, skipping
/// any flag already present on the command line.
fn merge_config(argv: Vec<OsString>, path: &Path, command: &Command) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| usage(format!("--config {}: expected a JSON object", path.display())))?;

    let mut path_names = vec![match command {
        Command::Dns(_) => "dns",
        other => other.name(),
    }];
    if let Command::Dns(d) = command {
        path_names.push(d.leaf());
    }
    let mut at = 0;
    for name in path_names {
        at = argv
            .iter()
            .skip(at)
            .position(|a| a == name)
            .map(|p| at + p + 1)
            .ok_or_else(|| usage(format!("subcommand `{name}` not found on the command line")))?;
    }
    let given = |flag: &str| {
        argv.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&format!("{flag}="))
        })
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if given(&flag) {
            continue;
        }
        let scalar = |v: &serde_json::Value| -> Result<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                serde_json::Value::Bool(b) => Ok(b.to_string()),
                _ => Err(usage(format!("--config: `{key}` must be a scalar or a list of scalars"))),
            }
        };
        match v {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => extra.push(flag.into()),
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                extra.push(flag.into());
                extra.push(parts.join(",").into());
            }
            other => {
                extra.push(flag.into());
                extra.push(scalar(other)?.into());
            }
        }
    }
    let mut out = argv;
    out.splice(at..at, extra);
    Ok(out)
}
