//! Replicated-request latency toolkit.
//!
//! * [`distributions`]: unit-mean service-time laws.
//! * [`sim`]: N-server FIFO simulation with k-way replication.
//! * [`threshold`]: threshold-load search and the sweep studies built on it.
//! * [`analytic`]: closed-form and geometric-approximation calculators.
//! * [`handshake`]: exact TCP three-way handshake completion-time model.
//! * [`econ`]: break-even cost-benefit arithmetic.

pub mod analytic;
pub mod distributions;
pub mod econ;
pub mod error;
pub mod handshake;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod threshold;

pub use distributions::{Family, Moments, ServiceDistribution, SimplexScheme};
pub use error::{Error, Result};
pub use sim::{paired_comparison, response_cdf, run_simulation, PairedComparison, SimConfig, SimResult};
