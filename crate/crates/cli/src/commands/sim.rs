use redundancy_core::sim::{cdf_csv, SimConfig};
use redundancy_core::threshold::{
    find_threshold, n_scaling_csv, negating_overhead, overhead_csv, overhead_sweep,
    random_distribution_study, study_samples_csv, study_summary_csv, sweep_csv,
    tail_improvement_check, threshold_vs_n, variance_sweep, StudyConfig,
};
use redundancy_core::{paired_comparison, run_simulation, Family, SimplexScheme};
use serde::Serialize;

use super::{check_preset, default_loads, parse_dist, Outcome};
use crate::args::{
    Budget, FamilyArg, OverheadSweepArgs, Preset, RandomStudyArgs, SimulateArgs, TailCheckArgs,
    ThresholdArgs, ThresholdVsNArgs, VarianceSweepArgs,
};
use crate::error::{usage, Result};
use crate::output::Artifacts;

pub fn simulate(mut args: SimulateArgs, art: &mut Artifacts) -> Result<Outcome> {
    let preset = check_preset(args.preset, "simulate")?;
    if preset == Some(Preset::FigMd1) {
        args.system.dist.get_or_insert_with(|| "deterministic".into());
        if args.load.is_none() && args.loads.is_none() {
            args.loads = Some(default_loads(args.system.k));
        }
    }
    args.system.dist.get_or_insert_with(|| "exponential".into());
    art.parameters(&args, Some(args.seed))?;
    let service = parse_dist(args.system.dist.as_deref(), "exponential")?;
    let base = |load: f64| SimConfig {
        n_requests: args.requests,
        warmup_fraction: args.warmup,
        replications: args.replications,
        seed: args.seed,
        confidence: args.confidence,
        quantile_levels: args.quantiles.clone(),
        ..SimConfig::new(args.system.n, 1, load, service.clone())
    };
    let k = args.system.k;
    let replicated =
        |load: f64| base(load).with_replication(k).with_overhead(args.overhead);

    if let Some(load) = args.load {
        if k == 1 {
            let res = run_simulation(&base(load))?;
            art.json("result.json", &res)?;
            return Outcome::json(&res);
        }
        let pair = paired_comparison(&base(load), &replicated(load))?;
        if args.cdf_points < 2 {
            return Err(usage("--cdf-points: need at least 2 points"));
        }
        let hi = args
            .cdf_max
            .unwrap_or_else(|| pair.base.quantile(0.999).max(pair.replicated.quantile(0.999)));
        let grid: Vec<f64> = (0..args.cdf_points)
            .map(|i| hi * i as f64 / (args.cdf_points - 1) as f64)
            .collect();
        art.json("result.json", &pair)?;
        art.text("cdf.csv", &cdf_csv(&pair, &grid)?)?;
        return Outcome::json(&pair);
    }

    let loads = args
        .loads
        .clone()
        .ok_or_else(|| usage("--load or --loads is required"))?;
    if k == 1 {
        // Validate every cell before spending time on any of them.
        for &l in &loads {
            base(l).validate()?;
        }
    } else {
        for &l in &loads {
            replicated(l).validate()?;
        }
    }
    let q_cols: Vec<String> = args.quantiles.iter().map(|q| format!("q{q}")).collect();
    let mut csv = String::from("load_frac,mean_base,mean_base_hw");
    if k >= 2 {
        csv.push_str(",mean_rep,mean_rep_hw,delta_mean,delta_hw");
    }
    for c in &q_cols {
        csv.push_str(&format!(",{c}_base"));
        if k >= 2 {
            csv.push_str(&format!(",{c}_rep"));
        }
    }
    csv.push('\n');
    let hw = |h: Option<f64>| h.map(|x| x.to_string()).unwrap_or_default();
    let mut results = Vec::new();
    for &load in &loads {
        if k == 1 {
            let res = run_simulation(&base(load))?;
            csv.push_str(&format!("{load},{},{}", res.mean.mean, hw(res.mean.half_width)));
            for q in &res.quantiles {
                csv.push_str(&format!(",{}", q.value));
            }
            results.push(serde_json::to_value(&res)?);
        } else {
            let pair = paired_comparison(&base(load), &replicated(load))?;
            csv.push_str(&format!(
                "{load},{},{},{},{},{},{}",
                pair.base.mean.mean,
                hw(pair.base.mean.half_width),
                pair.replicated.mean.mean,
                hw(pair.replicated.mean.half_width),
                pair.delta.mean,
                hw(pair.delta.half_width)
            ));
            for (b, r) in pair.base.quantiles.iter().zip(&pair.replicated.quantiles) {
                csv.push_str(&format!(",{},{}", b.value, r.value));
            }
            results.push(serde_json::to_value(&pair)?);
        }
        csv.push('\n');
    }
    art.text("sweep.csv", &csv)?;
    art.json("sweep.json", &results)?;
    Ok(Outcome::text(csv))
}

pub fn threshold(mut args: ThresholdArgs, art: &mut Artifacts) -> Result<Outcome> {
    args.system.dist.get_or_insert_with(|| "exponential".into());
    let controls = args.controls.controls(Budget::Standard);
    art.parameters(&Resolved { args: &args, controls: &controls }, Some(controls.seed))?;
    let dist = parse_dist(args.system.dist.as_deref(), "exponential")?;
    let est = find_threshold(&dist, args.system.k, args.system.n, args.overhead, &controls)?;
    art.json("threshold.json", &est)?;
    Outcome::json(&est)
}

/// Flags plus the simulation budget they resolve to.
#[derive(Serialize)]
struct Resolved<'a, A: Serialize> {
    #[serde(flatten)]
    args: &'a A,
    controls: &'a redundancy_core::threshold::SearchControls,
}

fn default_grid(family: Family) -> Vec<f64> {
    match family {
        Family::Pareto => vec![4.0, 3.0, 2.5, 2.2, 2.1],
        Family::Weibull => vec![4.0, 2.0, 1.0, 0.7, 0.5],
        _ => vec![0.0, 0.25, 0.5, 0.75, 0.9],
    }
}

pub fn variance(mut args: VarianceSweepArgs, art: &mut Artifacts) -> Result<Outcome> {
    if check_preset(args.preset, "variance-sweep")? == Some(Preset::FigTwoPoint) {
        args.family.get_or_insert(FamilyArg::TwoPoint);
    }
    let family = args
        .family
        .ok_or_else(|| usage("--family is required (pareto, weibull or two-point)"))?
        .family();
    args.grid.get_or_insert_with(|| default_grid(family));
    let controls = args.controls.controls(Budget::Standard);
    art.parameters(&Resolved { args: &args, controls: &controls }, Some(controls.seed))?;
    let grid = args.grid.as_deref().unwrap_or_default();
    let points = variance_sweep(family, grid, args.k, args.n, &controls)?;
    let csv = sweep_csv(&points);
    art.text("sweep.csv", &csv)?;
    art.json("sweep.json", &points)?;
    Ok(Outcome::text(csv))
}

pub fn random_study(args: RandomStudyArgs, art: &mut Artifacts) -> Result<Outcome> {
    check_preset(args.preset, "random-study")?;
    let schemes = args
        .schemes
        .iter()
        .map(|s| s.parse::<SimplexScheme>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let controls = args.controls.controls(Budget::Quick);
    let config = StudyConfig {
        support_sizes: args.support.clone(),
        schemes,
        n_samples: args.samples,
        k: args.k,
        n_servers: args.n,
        master_seed: controls.seed,
        controls,
    };
    art.parameters(&config, Some(config.master_seed))?;
    let cells = random_distribution_study(&config)?;
    let summary = study_summary_csv(&cells);
    art.text("summary.csv", &summary)?;
    art.text("samples.csv", &study_samples_csv(&cells))?;
    art.json("study.json", &cells)?;
    Ok(Outcome::text(summary))
}

pub fn vs_n(mut args: ThresholdVsNArgs, art: &mut Artifacts) -> Result<Outcome> {
    if check_preset(args.preset, "threshold-vs-n")? == Some(Preset::FigVaryNservers) {
        args.dist.get_or_insert_with(|| "deterministic".into());
        args.ns.get_or_insert_with(|| vec![2, 4, 10, 20, 40, 100]);
    }
    args.dist.get_or_insert_with(|| "exponential".into());
    args.ns.get_or_insert_with(|| vec![2, 4, 10, 20, 40]);
    let controls = args.controls.controls(Budget::Standard);
    art.parameters(&Resolved { args: &args, controls: &controls }, Some(controls.seed))?;
    let dist = parse_dist(args.dist.as_deref(), "exponential")?;
    let ns = args.ns.as_deref().unwrap_or_default();
    let points = threshold_vs_n(&dist, args.k, ns, args.reference_n, &controls)?;
    let csv = n_scaling_csv(&points);
    art.text("n_scaling.csv", &csv)?;
    art.json("n_scaling.json", &points)?;
    Ok(Outcome::text(csv))
}

#[derive(Serialize)]
struct OverheadReport<'a> {
    /// Smallest overhead at which replication raises the mean at every load.
    negating_overhead: Option<f64>,
    cells: &'a [redundancy_core::threshold::OverheadCell],
}

pub fn overhead(mut args: OverheadSweepArgs, art: &mut Artifacts) -> Result<Outcome> {
    check_preset(args.preset, "overhead-sweep")?;
    args.dist.get_or_insert_with(|| "deterministic".into());
    args.overheads
        .get_or_insert_with(|| vec![0.0, 0.01, 0.02, 0.03, 0.05, 0.1]);
    args.loads.get_or_insert_with(|| default_loads(args.k));
    let controls = args.controls.controls(Budget::Standard);
    art.parameters(&Resolved { args: &args, controls: &controls }, Some(controls.seed))?;
    let dist = parse_dist(args.dist.as_deref(), "deterministic")?;
    let cells = overhead_sweep(
        &dist,
        args.k,
        args.n,
        args.overheads.as_deref().unwrap_or_default(),
        args.loads.as_deref().unwrap_or_default(),
        &controls,
    )?;
    let csv = overhead_csv(&cells);
    art.text("overhead.csv", &csv)?;
    art.json(
        "overhead.json",
        &OverheadReport {
            negating_overhead: negating_overhead(&cells),
            cells: &cells,
        },
    )?;
    Ok(Outcome::text(csv))
}

pub fn tail(mut args: TailCheckArgs, art: &mut Artifacts) -> Result<Outcome> {
    args.system.dist.get_or_insert_with(|| "pareto:alpha=2.1".into());
    let controls = args.controls.controls(Budget::Standard);
    art.parameters(&Resolved { args: &args, controls: &controls }, Some(controls.seed))?;
    let dist = parse_dist(args.system.dist.as_deref(), "pareto:alpha=2.1")?;
    let check = tail_improvement_check(
        &dist,
        args.system.k,
        args.system.n,
        args.load,
        args.q,
        args.levels.as_deref(),
        &controls,
    )?;
    let mut csv = String::from("q,base,replicated,diff_lo,diff_hi,improved\n");
    for l in &check.levels {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            l.q, l.base, l.replicated, l.diff_lo, l.diff_hi, l.improved
        ));
    }
    art.text("tail.csv", &csv)?;
    art.json("tail.json", &check)?;
    Outcome::json(&check)
}
