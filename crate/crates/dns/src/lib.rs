//! Replicated DNS probing: a UDP client that queries several resolvers at
//! once, a scripted mock resolver, a two-stage campaign driver and a
//! first-response analyzer.

pub mod analyze;
pub mod campaign;
pub mod delay;
pub mod error;
pub mod io;
pub mod mock;
pub mod probe;
pub mod wire;

pub use analyze::{analyze, AnalyzeConfig, Report};
pub use campaign::{probe_once, rank_resolvers, run_campaign, CampaignConfig, Ranking, TrialRecord};
pub use delay::DelayLaw;
pub use error::{DnsError, Result};
pub use mock::{MockConfig, MockServer, MockStats};
pub use probe::{Prober, ResolverSpec, SimulatedProber, Strategy, UdpProber, VirtualResolver, LOSS_MS};
