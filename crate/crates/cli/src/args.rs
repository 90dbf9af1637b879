//! Command-line flags. Times are in mean service times unless a flag says
//! otherwise; loads are per-server utilization fractions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use redundancy_core::threshold::{BaselineMode, SearchControls};
use redundancy_core::Family;

pub const OUT_DIR_ENV: &str = "REDUNDANCY_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "redundancy", version, about = "When does replicating requests reduce latency?")]
pub struct Cli {
    /// Directory that receives one artifact folder per run
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "redundancy-out")]
    pub out: PathBuf,

    /// Worker threads for parallel cells [default: available cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON object of flag values (keys are flag names without dashes);
    /// flags given on the command line take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the N-server system with and without k-way replication
    Simulate(SimulateArgs),
    /// Find the load at which replication stops reducing mean latency
    Threshold(ThresholdArgs),
    /// Threshold across a one-parameter distribution family
    VarianceSweep(VarianceSweepArgs),
    /// Thresholds of randomly drawn discrete service laws
    RandomStudy(RandomStudyArgs),
    /// Threshold as a function of the number of servers
    ThresholdVsN(ThresholdVsNArgs),
    /// Mean latency change on a client-overhead by load grid
    OverheadSweep(OverheadSweepArgs),
    /// Compare upper response-time quantiles with and without replication
    TailCheck(TailCheckArgs),
    /// Closed-form thresholds and the geometric queue-length approximation
    Analytic(AnalyticArgs),
    /// TCP handshake completion time with and without duplicated packets
    TcpHandshake(HandshakeArgs),
    /// Break-even latency savings (ms per KB) for bandwidth price points
    CostBenefit(CostBenefitArgs),
    /// Replicated DNS probing
    #[command(subcommand)]
    Dns(DnsCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Threshold(_) => "threshold",
            Command::VarianceSweep(_) => "variance-sweep",
            Command::RandomStudy(_) => "random-study",
            Command::ThresholdVsN(_) => "threshold-vs-n",
            Command::OverheadSweep(_) => "overhead-sweep",
            Command::TailCheck(_) => "tail-check",
            Command::Analytic(_) => "analytic",
            Command::TcpHandshake(_) => "tcp-handshake",
            Command::CostBenefit(_) => "cost-benefit",
            Command::Dns(d) => d.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// simulate: deterministic service, loads 0.05..0.45
    FigMd1,
    /// variance-sweep: two-point family
    FigTwoPoint,
    /// overhead-sweep: deterministic service, overheads 0..10%
    FigClientOverhead,
    /// random-study: supports 2, 5, 10 under both schemes
    FigRandomDiscrete,
    /// threshold-vs-n: deterministic service, N from 2 to 100
    FigVaryNservers,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::FigMd1 => "fig-md1",
            Preset::FigTwoPoint => "fig-two-point",
            Preset::FigClientOverhead => "fig-client-overhead",
            Preset::FigRandomDiscrete => "fig-random-discrete",
            Preset::FigVaryNservers => "fig-vary-nservers",
        }
    }

    pub fn command(self) -> &'static str {
        match self {
            Preset::FigMd1 => "simulate",
            Preset::FigTwoPoint => "variance-sweep",
            Preset::FigClientOverhead => "overhead-sweep",
            Preset::FigRandomDiscrete => "random-study",
            Preset::FigVaryNservers => "threshold-vs-n",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SystemArgs {
    /// Service law, e.g. exponential, deterministic, pareto:alpha=2.1,
    /// weibull:shape=0.5, twopoint:p=0.5, discrete:values=0.5,1.5;probs=0.5,0.5
    #[arg(long)]
    pub dist: Option<String>,
    /// Copies per request
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Number of servers
    #[arg(long, default_value_t = 20)]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    Quick,
    Standard,
    Precise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineArg {
    Simulated,
    Exact,
    Auto,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ControlArgs {
    /// Simulation budget preset; the flags below override its fields
    #[arg(long, value_enum)]
    pub budget: Option<Budget>,
    /// Requests per replication
    #[arg(long)]
    pub requests: Option<usize>,
    /// Fraction of each replication discarded as warmup
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Replications before the sign of the mean change is first tested
    #[arg(long)]
    pub min_reps: Option<usize>,
    /// Replication budget per probed load
    #[arg(long)]
    pub max_reps: Option<usize>,
    /// Replications added per round while unresolved
    #[arg(long)]
    pub batch: Option<usize>,
    /// Stop bisecting below this bracket width (load fraction)
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Confidence level of sign tests and intervals
    #[arg(long)]
    pub confidence: Option<f64>,
    /// How the unreplicated mean is obtained
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// Master seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl ControlArgs {
    pub fn controls(&self, default_budget: Budget) -> SearchControls {
        let mut c = match self.budget.unwrap_or(default_budget) {
            Budget::Quick => SearchControls::quick(),
            Budget::Standard => SearchControls::default(),
            Budget::Precise => SearchControls::precise(),
        };
        c.seed = self.seed;
        if let Some(x) = self.requests {
            c.n_requests = x;
        }
        if let Some(x) = self.warmup {
            c.warmup_fraction = x;
        }
        if let Some(x) = self.min_reps {
            c.min_replications = x;
        }
        if let Some(x) = self.max_reps {
            c.max_replications = x;
        }
        if let Some(x) = self.batch {
            c.batch = x;
        }
        if let Some(x) = self.tolerance {
            c.tolerance = x;
        }
        if let Some(x) = self.confidence {
            c.confidence = x;
        }
        if let Some(b) = self.baseline {
            c.baseline = match b {
                BaselineArg::Simulated => BaselineMode::Simulated,
                BaselineArg::Exact => BaselineMode::Exact,
                BaselineArg::Auto => BaselineMode::Auto,
            };
        }
        c
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Per-server load from unreplicated traffic
    #[arg(long, conflicts_with = "loads")]
    pub load: Option<f64>,
    /// Comma-separated loads for a load sweep (one CSV row each)
    #[arg(long, value_delimiter = ',')]
    pub loads: Option<Vec<f64>>,
    /// Client overhead added to replicated requests, in mean service times
    #[arg(long, default_value_t = 0.0)]
    pub overhead: f64,
    /// Requests per replication
    #[arg(long, default_value_t = 200_000)]
    pub requests: usize,
    /// Independent replications
    #[arg(long, default_value_t = 10)]
    pub replications: usize,
    /// Fraction of each replication discarded as warmup
    #[arg(long, default_value_t = 0.2)]
    pub warmup: f64,
    /// Confidence level of the mean intervals
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Reported quantile levels
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,0.99,0.999")]
    pub quantiles: Vec<f64>,
    /// Points on the CDF grid (single-load runs)
    #[arg(long, default_value_t = 200)]
    pub cdf_points: usize,
    /// Right end of the CDF grid, in mean service times [default: base 99.9th percentile]
    #[arg(long)]
    pub cdf_max: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Client overhead added to replicated requests, in mean service times
    #[arg(long, default_value_t = 0.0)]
    pub overhead: f64,
    #[command(flatten)]
    pub controls: ControlArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    /// Parameter: tail index alpha
    Pareto,
    /// Parameter: shape
    Weibull,
    /// Parameter: probability of the 0.5 atom
    TwoPoint,
}

impl FamilyArg {
    pub fn family(self) -> Family {
        match self {
            FamilyArg::Pareto => Family::Pareto,
            FamilyArg::Weibull => Family::Weibull,
            FamilyArg::TwoPoint => Family::TwoPoint,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VarianceSweepArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Comma-separated family parameters [default depends on the family]
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[command(flatten)]
    pub controls: ControlArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RandomStudyArgs {
    /// Support sizes of the random discrete laws
    #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
    pub support: Vec<usize>,
    /// Probability-vector schemes: uniform, dirichlet01
    #[arg(long, value_delimiter = ',', default_value = "uniform,dirichlet01")]
    pub schemes: Vec<String>,
    /// Laws drawn per (support, scheme) cell
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[command(flatten)]
    pub controls: ControlArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdVsNArgs {
    /// Service law [default: exponential]
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Comma-separated server counts
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Server count of the simulated large-N reference (non-exponential laws)
    #[arg(long, default_value_t = 100)]
    pub reference_n: usize,
    #[command(flatten)]
    pub controls: ControlArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OverheadSweepArgs {
    /// Service law [default: deterministic]
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Comma-separated overheads, in mean service times
    #[arg(long, value_delimiter = ',')]
    pub overheads: Option<Vec<f64>>,
    /// Comma-separated loads
    #[arg(long, value_delimiter = ',')]
    pub loads: Option<Vec<f64>>,
    #[command(flatten)]
    pub controls: ControlArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TailCheckArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Per-server load from unreplicated traffic
    #[arg(long)]
    pub load: f64,
    /// Lowest quantile level checked
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    /// Explicit comma-separated levels [default: q, (1+q)/2, 0.99, 0.999]
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[command(flatten)]
    pub controls: ControlArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticArgs {
    /// Squared coefficients of variation for the geometric approximation
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,1,4,16")]
    pub scv: Vec<f64>,
    /// Also report closed-form means at this load
    #[arg(long)]
    pub load: Option<f64>,
    /// Unreplicated mean response, in mean service times, for the overhead bound
    #[arg(long, requires = "overhead")]
    pub mean_base: Option<f64>,
    /// Client overhead, in mean service times, for the overhead bound
    #[arg(long, requires = "mean_base")]
    pub overhead: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HandshakeArgs {
    /// Round-trip time, ms
    #[arg(long, default_value_t = 100.0)]
    pub rtt_ms: f64,
    /// Loss probability of one packet
    #[arg(long, default_value_t = 0.0048)]
    pub p_single: f64,
    /// Probability that both copies of a duplicated packet are lost
    #[arg(long, default_value_t = 0.0007)]
    pub p_dup: f64,
    /// Initial SYN retransmission timeout, ms
    #[arg(long, default_value_t = 3000.0)]
    pub syn_rto_ms: f64,
    /// Initial SYN-ACK retransmission timeout, ms
    #[arg(long, default_value_t = 3000.0)]
    pub synack_rto_ms: f64,
    /// Timeout multiplier per retry
    #[arg(long, default_value_t = 2.0)]
    pub backoff: f64,
    /// Retries enumerated per packet
    #[arg(long, default_value_t = 6)]
    pub max_retries: u32,
    /// Reported quantile levels
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.99,0.999")]
    pub quantiles: Vec<f64>,
    /// Monte Carlo trials cross-checking the exact means (0 disables)
    #[arg(long, default_value_t = 0)]
    pub monte_carlo: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CostBenefitArgs {
    /// JSON list of {"name", "cost_per_gb"} plans [default: bundled price list]
    #[arg(long)]
    pub plans: Option<PathBuf>,
    /// JSON list of {"name", "dollars_per_hour"} values [default: bundled values]
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Latency saved, ms, for a cost-effectiveness check
    #[arg(long, requires = "extra_bytes")]
    pub savings_ms: Option<f64>,
    /// Extra bytes sent to achieve --savings-ms
    #[arg(long, requires = "savings_ms")]
    pub extra_bytes: Option<f64>,
    /// Break-even benchmark, ms per KB
    #[arg(long, default_value_t = 16.0)]
    pub benchmark: f64,
}

#[derive(Debug, Subcommand)]
pub enum DnsCommand {
    /// Stage 1: rank resolvers by mean latency to random names
    Rank(DnsRankArgs),
    /// Stage 2: random single and parallel strategies against a ranking
    Campaign(DnsCampaignArgs),
    /// Statistics and marginal cost-effectiveness of a trial log
    Analyze(DnsAnalyzeArgs),
    /// Loopback resolvers with scripted delays and drops
    MockServer(MockServerArgs),
}

impl DnsCommand {
    pub fn name(&self) -> &'static str {
        match self {
            DnsCommand::Rank(_) => "dns-rank",
            DnsCommand::Campaign(_) => "dns-campaign",
            DnsCommand::Analyze(_) => "dns-analyze",
            DnsCommand::MockServer(_) => "dns-mock-server",
        }
    }

    pub fn leaf(&self) -> &'static str {
        self.name().trim_start_matches("dns-")
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// Resolver list, one `label,ip:port` per line
    #[arg(long)]
    pub resolvers: PathBuf,
    /// Query names, one per line (sampled uniformly with replacement)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Number of trials
    #[arg(long)]
    pub trials: usize,
    /// Pause between trials, ms
    #[arg(long, default_value_t = 5000)]
    pub gap_ms: u64,
    /// Queries slower than this are lost, ms
    #[arg(long, default_value_t = 2000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DnsRankArgs {
    #[command(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DnsCampaignArgs {
    #[command(flatten)]
    pub probe: ProbeArgs,
    /// ranking.json from `dns rank`; without it the resolver list order is
    /// taken as the ranking
    #[arg(long)]
    pub ranking: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DnsAnalyzeArgs {
    /// Trial log CSV from `dns campaign`
    #[arg(long)]
    pub trials: PathBuf,
    /// Bytes per extra query copy
    #[arg(long, default_value_t = 500.0)]
    pub bytes_per_copy: f64,
    /// Break-even benchmark, ms per KB
    #[arg(long, default_value_t = 16.0)]
    pub benchmark: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MockServerArgs {
    /// Resolver to run, `DELAY[@DROP]` with DELAY one of fixed:MS, exp:MEAN_MS,
    /// uniform:LO_MS:HI_MS, shiftexp:SHIFT_MS:MEAN_MS; repeat for several
    #[arg(long = "mock", required = true)]
    pub mocks: Vec<String>,
    /// Address of the first resolver; later ones take the following ports
    /// (port 0 picks free ports)
    #[arg(long, default_value = "127.0.0.1:0")]
    pub bind: std::net::SocketAddr,
    /// Stop after this many seconds [default: run until killed]
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
