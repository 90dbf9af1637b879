use std::time::{Duration, Instant};

use redundancy_dns::io::{
    format_resolvers, load_trials, read_corpus, read_resolvers, save_trials, strategy_csv,
};
use redundancy_dns::{
    analyze, rank_resolvers, run_campaign, AnalyzeConfig, CampaignConfig, DelayLaw, MockConfig,
    MockServer, ResolverSpec, UdpProber,
};
use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::args::{DnsAnalyzeArgs, DnsCampaignArgs, DnsRankArgs, MockServerArgs, ProbeArgs};
use crate::error::{usage, CliError, Result};
use crate::output::Artifacts;

const LIVE_NOTE: &str = "live network probing: outputs depend on the network and do not reproduce";

#[derive(Debug, Serialize, Deserialize)]
struct RankingFile {
    /// Resolver indices into the list file, best first.
    order: Vec<usize>,
    labels: Vec<String>,
    /// Mean per resolver index, ms; null when never queried.
    mean_ms: Vec<Option<f64>>,
    counts: Vec<usize>,
}

fn prober(p: &ProbeArgs) -> Result<(Vec<ResolverSpec>, Vec<String>, UdpProber, CampaignConfig)> {
    let resolvers = read_resolvers(&p.resolvers)?;
    let corpus = read_corpus(&p.corpus)?;
    if p.trials == 0 {
        return Err(usage("--trials: need at least one trial"));
    }
    let prober = UdpProber::new(resolvers.clone(), Duration::from_millis(p.timeout_ms), p.seed)?;
    let config = CampaignConfig::new(p.trials, p.seed).with_gap(Duration::from_millis(p.gap_ms));
    Ok((resolvers, corpus, prober, config))
}

pub fn rank(args: DnsRankArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, Some(args.probe.seed))?;
    art.note(LIVE_NOTE);
    let (resolvers, corpus, mut prober, config) = prober(&args.probe)?;
    let ranking = rank_resolvers(&mut prober, &corpus, &config)?;
    save_trials(&art.path("rank_trials.csv"), &ranking.trials)?;
    art.track("rank_trials.csv");
    let ranked: Vec<ResolverSpec> = ranking.order.iter().map(|&i| resolvers[i].clone()).collect();
    art.text("ranked_resolvers.txt", &format_resolvers(&ranked))?;
    let file = RankingFile {
        order: ranking.order,
        labels: resolvers.iter().map(|r| r.label.clone()).collect(),
        mean_ms: ranking.means,
        counts: ranking.counts,
    };
    art.json("ranking.json", &file)?;
    Outcome::json(&file)
}

pub fn campaign(args: DnsCampaignArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, Some(args.probe.seed))?;
    art.note(LIVE_NOTE);
    let (resolvers, corpus, mut prober, config) = prober(&args.probe)?;
    let order = match &args.ranking {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
            let file: RankingFile = serde_json::from_str(&text)
                .map_err(|e| usage(format!("--ranking {}: {e}", path.display())))?;
            file.order
        }
        None => (0..resolvers.len()).collect(),
    };
    let trials = run_campaign(&mut prober, &order, &corpus, &config)?;
    save_trials(&art.path("trials.csv"), &trials)?;
    art.track("trials.csv");
    let lost = trials.iter().filter(|t| t.lost).count();
    Ok(Outcome::text(format!(
        "{} trials, {lost} lost, log in {}\n",
        trials.len(),
        art.path("trials.csv").display()
    )))
}

pub fn analyze_log(args: DnsAnalyzeArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, None)?;
    let trials = load_trials(&args.trials)?;
    let report = analyze(
        &trials,
        AnalyzeConfig {
            bytes_per_copy: args.bytes_per_copy,
            benchmark_ms_per_kb: args.benchmark,
        },
    )?;
    art.text("strategies.csv", &strategy_csv(&report)?)?;
    art.json("report.json", &report)?;
    Outcome::json(&report)
}

fn parse_mock(spec: &str, seed: u64) -> Result<MockConfig> {
    let (delay, drop) = match spec.rsplit_once('@') {
        Some((d, p)) => (
            d,
            p.parse::<f64>()
                .map_err(|_| usage(format!("--mock {spec}: drop probability `{p}` is not a number")))?,
        ),
        None => (spec, 0.0),
    };
    let delay: DelayLaw = delay
        .parse()
        .map_err(|e| usage(format!("--mock {spec}: {e}")))?;
    let config = MockConfig::new(delay).with_drop(drop).with_seed(seed);
    config
        .validate()
        .map_err(|e| usage(format!("--mock {spec}: {e}")))?;
    Ok(config)
}

pub fn mock_server(args: MockServerArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, Some(args.seed))?;
    let configs = args
        .mocks
        .iter()
        .enumerate()
        .map(|(i, m)| parse_mock(m, redundancy_core::rng::derive_seed(args.seed, &[i as u64])))
        .collect::<Result<Vec<_>>>()?;
    let mut servers = Vec::new();
    for (i, c) in configs.into_iter().enumerate() {
        let mut addr = args.bind;
        if addr.port() != 0 {
            let port = addr.port() as usize + i;
            let port = u16::try_from(port).map_err(|_| usage("--bind: port range overflows"))?;
            addr.set_port(port);
        }
        servers.push(MockServer::spawn(addr, c)?);
    }
    let specs: Vec<ResolverSpec> = servers
        .iter()
        .enumerate()
        .map(|(i, s)| ResolverSpec {
            label: format!("mock{i}"),
            address: s.local_addr(),
        })
        .collect();
    let list = format_resolvers(&specs);
    art.text("resolvers.txt", &list)?;
    art.checkpoint()?;
    print!("{list}");
    use std::io::Write;
    let _ = std::io::stdout().flush();

    match args.duration_s {
        Some(s) => {
            let d = Duration::try_from_secs_f64(s)
                .map_err(|e| usage(format!("--duration-s {s}: {e}")))?;
            let end = Instant::now() + d;
            while Instant::now() < end {
                std::thread::sleep((end - Instant::now()).min(Duration::from_millis(100)));
            }
        }
        None => loop {
            std::thread::park();
        },
    }
    let stats: Vec<_> = servers.into_iter().map(MockServer::shutdown).collect();
    art.json("mock_stats.json", &stats)?;
    Ok(Outcome::text(String::new()))
}
