use std::path::Path;

use redundancy_core::analytic::{
    approx_replicated_mean, exponential_threshold, geometric_approx_threshold, mm1_mean,
    overhead_bound, two_moment_mean, ApproxModel, OverheadVerdict,
};
use redundancy_core::econ::{
    cost_effectiveness, default_plans, default_values, table, table_csv, CostEffectiveness,
    CostPlan, ValueEstimate,
};
use redundancy_core::handshake::{
    handshake_distribution, monte_carlo_mean, report, HandshakeParams, HandshakeReport,
};
use redundancy_core::stats::Estimate;
use serde::{de::DeserializeOwned, Serialize};

use super::Outcome;
use crate::args::{AnalyticArgs, CostBenefitArgs, HandshakeArgs};
use crate::error::{usage, CliError, Result};
use crate::output::Artifacts;

#[derive(Serialize)]
struct GeometricPoint {
    scv: f64,
    threshold: f64,
}

#[derive(Serialize)]
struct MeansAtLoad {
    scv: f64,
    two_moment_base: f64,
    approx_base: f64,
    approx_replicated: Option<f64>,
}

#[derive(Serialize)]
struct LoadReport {
    load: f64,
    mm1_base: f64,
    mm1_replicated: Option<f64>,
    by_scv: Vec<MeansAtLoad>,
}

#[derive(Serialize)]
struct Bound {
    mean_base: f64,
    overhead: f64,
    verdict: OverheadVerdict,
}

#[derive(Serialize)]
struct AnalyticReport {
    exponential_threshold: f64,
    geometric: Vec<GeometricPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at_load: Option<LoadReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overhead_bound: Option<Bound>,
}

pub fn analytic(args: AnalyticArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, None)?;
    let geometric = args
        .scv
        .iter()
        .map(|&scv| {
            Ok(GeometricPoint {
                scv,
                threshold: geometric_approx_threshold(scv)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let at_load = args
        .load
        .map(|load| -> Result<LoadReport> {
            let by_scv = args
                .scv
                .iter()
                .map(|&scv| {
                    Ok(MeansAtLoad {
                        scv,
                        two_moment_base: two_moment_mean(load, scv)?,
                        approx_base: ApproxModel::new(scv, load)?.base_mean(),
                        approx_replicated: approx_replicated_mean(load, scv).ok(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LoadReport {
                load,
                mm1_base: mm1_mean(load, false)?,
                mm1_replicated: mm1_mean(load, true).ok(),
                by_scv,
            })
        })
        .transpose()?;
    let bound = match (args.mean_base, args.overhead) {
        (Some(mean_base), Some(overhead)) => Some(Bound {
            mean_base,
            overhead,
            verdict: overhead_bound(mean_base, overhead)?,
        }),
        _ => None,
    };
    let report = AnalyticReport {
        exponential_threshold: exponential_threshold(),
        geometric,
        at_load,
        overhead_bound: bound,
    };
    let mut csv = String::from("scv,threshold\n");
    for g in &report.geometric {
        csv.push_str(&format!("{},{}\n", g.scv, g.threshold));
    }
    art.text("geometric.csv", &csv)?;
    art.json("analytic.json", &report)?;
    Outcome::json(&report)
}

/// 99.9th-percentile saving quoted for the default parameters; shown next to
/// the computed value, which need not agree with it.
const QUOTED_P999_SAVING_MS: f64 = 880.0;

#[derive(Serialize)]
struct HandshakeOutput {
    #[serde(flatten)]
    report: HandshakeReport,
    quoted_p999_saving_ms: f64,
    /// P(done by t) with duplication is at least that without, at every atom.
    duplicated_dominates: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<[Estimate; 2]>,
}

pub fn handshake(args: HandshakeArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, Some(args.seed))?;
    let params = HandshakeParams {
        syn_rto_ms: args.syn_rto_ms,
        synack_rto_ms: args.synack_rto_ms,
        backoff_factor: args.backoff,
        max_retries: args.max_retries,
        ..HandshakeParams::new(args.rtt_ms).with_loss(args.p_single, args.p_dup)
    };
    let rep = report(&params, &args.quantiles)?;
    let undup = handshake_distribution(&params, false)?;
    let dup = handshake_distribution(&params, true)?;
    let mut times: Vec<f64> = undup.atoms.iter().chain(&dup.atoms).map(|a| a.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let duplicated_dominates = times.iter().all(|&t| dup.cdf(t) >= undup.cdf(t) - 1e-12);
    let mut csv = String::from("t_ms,cdf_undup,cdf_dup\n");
    for &t in &times {
        csv.push_str(&format!("{t},{},{}\n", undup.cdf(t), dup.cdf(t)));
    }
    let monte_carlo = if args.monte_carlo > 0 {
        Some([
            monte_carlo_mean(&params, false, args.monte_carlo, args.seed)?,
            monte_carlo_mean(&params, true, args.monte_carlo, args.seed)?,
        ])
    } else {
        None
    };
    let out = HandshakeOutput {
        report: rep,
        quoted_p999_saving_ms: QUOTED_P999_SAVING_MS,
        duplicated_dominates,
        monte_carlo,
    };
    art.text("cdf.csv", &csv)?;
    art.json("handshake.json", &out)?;
    Outcome::json(&out)
}

fn read_json<T: DeserializeOwned>(path: &Path, flag: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{flag} {}: {e}", path.display())))
}

pub fn cost_benefit(args: CostBenefitArgs, art: &mut Artifacts) -> Result<Outcome> {
    art.parameters(&args, None)?;
    let plans: Vec<CostPlan> = match &args.plans {
        Some(p) => read_json::<Vec<CostPlan>>(p, "--plans")?
            .into_iter()
            .map(|p| CostPlan::new(p.name, p.cost_per_gb))
            .collect::<redundancy_core::Result<_>>()?,
        None => default_plans(),
    };
    let values: Vec<ValueEstimate> = match &args.values {
        Some(p) => read_json::<Vec<ValueEstimate>>(p, "--values")?
            .into_iter()
            .map(|v| ValueEstimate::new(v.name, v.dollars_per_hour))
            .collect::<redundancy_core::Result<_>>()?,
        None => default_values(),
    };
    let rows = table(&plans, &values)?;
    let csv = table_csv(&rows, &values);
    art.text("cost_benefit.csv", &csv)?;
    if let (Some(s), Some(b)) = (args.savings_ms, args.extra_bytes) {
        let ce: CostEffectiveness = cost_effectiveness(s, b, args.benchmark)?;
        art.json("effectiveness.json", &ce)?;
        eprintln!(
            "{s} ms for {b} bytes = {:.2} ms/KB ({} the {} ms/KB benchmark)",
            ce.ms_per_kb,
            if ce.worthwhile { "meets" } else { "below" },
            ce.benchmark
        );
    }
    Ok(Outcome::text(csv))
}
