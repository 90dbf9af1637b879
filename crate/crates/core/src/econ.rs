//! Break-even latency savings per kilobyte of added traffic.
//!
//! Units: 1 GB = 2^20 KB, 1 hour = 3.6e6 ms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const KB_PER_GB: f64 = 1_048_576.0;
pub const MS_PER_HOUR: f64 = 3.6e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPlan {
    pub name: String,
    pub cost_per_gb: f64,
}

impl CostPlan {
    pub fn new(name: impl Into<String>, cost_per_gb: f64) -> Result<Self> {
        if !(cost_per_gb >= 0.0 && cost_per_gb.is_finite()) {
            return Err(invalid("cost_per_gb", format!("{cost_per_gb} must be >= 0")));
        }
        Ok(CostPlan {
            name: name.into(),
            cost_per_gb,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    #[serde(default)]
    pub name: String,
    pub dollars_per_hour: f64,
}

impl ValueEstimate {
    pub fn new(name: impl Into<String>, dollars_per_hour: f64) -> Result<Self> {
        if !(dollars_per_hour >= 0.0 && dollars_per_hour.is_finite()) {
            return Err(invalid(
                "dollars_per_hour",
                format!("{dollars_per_hour} must be >= 0"),
            ));
        }
        Ok(ValueEstimate {
            name: name.into(),
            dollars_per_hour,
        })
    }

    pub fn dollars_per_ms(&self) -> f64 {
        self.dollars_per_hour / MS_PER_HOUR
    }
}

/// Latency saving (ms per KB of added traffic) at which the value of the
/// saved time pays for the traffic.
pub fn break_even(plan: &CostPlan, value: &ValueEstimate) -> Result<f64> {
    if !(value.dollars_per_hour > 0.0) {
        return Err(invalid("dollars_per_hour", "value of time must be > 0"));
    }
    Ok((plan.cost_per_gb / KB_PER_GB) / value.dollars_per_ms())
}

/// Value of an hour of latency derived from a delay-injection study: each
/// event loses `fraction_change` of `revenue_per_event` per `delay_ms`.
pub fn value_from_study(
    revenue_per_event: f64,
    fraction_change: f64,
    delay_ms: f64,
) -> Result<ValueEstimate> {
    if !(delay_ms > 0.0) {
        return Err(invalid("delay_ms", format!("{delay_ms} must be > 0")));
    }
    ValueEstimate::new(
        "study",
        revenue_per_event * fraction_change / delay_ms * MS_PER_HOUR,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEffectiveness {
    pub ms_per_kb: f64,
    pub benchmark: f64,
    pub worthwhile: bool,
}

pub fn cost_effectiveness(
    savings_ms: f64,
    extra_bytes: f64,
    benchmark_ms_per_kb: f64,
) -> Result<CostEffectiveness> {
    if !(extra_bytes > 0.0) {
        return Err(invalid("extra_bytes", format!("{extra_bytes} must be > 0")));
    }
    let ms_per_kb = savings_ms * 1024.0 / extra_bytes;
    Ok(CostEffectiveness {
        ms_per_kb,
        benchmark: benchmark_ms_per_kb,
        worthwhile: ms_per_kb >= benchmark_ms_per_kb,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub plan: CostPlan,
    /// One break-even value per value column, in column order.
    pub break_even: Vec<f64>,
}

pub fn table(plans: &[CostPlan], values: &[ValueEstimate]) -> Result<Vec<TableRow>> {
    plans
        .iter()
        .map(|plan| {
            Ok(TableRow {
                plan: plan.clone(),
                break_even: values
                    .iter()
                    .map(|v| break_even(plan, v))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// CSV with columns `plan,cost_per_gb,<value name>...`.
pub fn table_csv(rows: &[TableRow], values: &[ValueEstimate]) -> String {
    let mut out = String::from("plan,cost_per_gb");
    for v in values {
        out.push(',');
        out.push_str(&csv_field(&v.name));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&csv_field(&row.plan.name));
        out.push_str(&format!(",{}", row.plan.cost_per_gb));
        for x in &row.break_even {
            out.push_str(&format!(",{x:.2}"));
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Published price points, December 2012.
pub fn default_plans() -> Vec<CostPlan> {
    [
        ("AWS common customer web app", 3.68),
        ("Amazon Route 53 DNS, 0.5 KB/query", 1.05),
        ("NearlyFreeSpeech.net small volume", 1.00),
        ("Amazon CloudFront US, 1 KB/object", 0.91),
        ("NearlyFreeSpeech.net large volume", 0.20),
        ("Amazon CloudFront US, 10 KB/object", 0.20),
        ("Amazon EC2 / Azure bandwidth", 0.12),
        ("MaxCDN starter overage", 0.07),
        ("DreamHost object delivery", 0.07),
        ("AT&T low-volume cell overage", 61.40),
        ("AT&T high-volume cell overage", 10.00),
        ("O2 mobile broadband 1->2 GB", 5.10),
        ("AT&T DSL", 0.20),
    ]
    .into_iter()
    .map(|(name, cost)| CostPlan {
        name: name.to_string(),
        cost_per_gb: cost,
    })
    .collect()
}

/// Server-side (search revenue) and client-side (hourly wage) values.
pub fn default_values() -> Vec<ValueEstimate> {
    vec![
        ValueEstimate {
            name: "server_0.76_per_hr".into(),
            dollars_per_hour: 0.76,
        },
        ValueEstimate {
            name: "client_23.73_per_hr".into(),
            dollars_per_hour: 23.73,
        },
    ]
}
