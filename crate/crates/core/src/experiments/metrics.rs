//! Per-replication records, summary metrics, and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{RcdpError, Result};
use crate::experiments::scenario::Budget;
use crate::spp::WEIGHT_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub scenario: String,
    pub replication: u64,
    pub policy: String,
    pub cost: f64,
    pub weight_used: f64,
    pub n_disamb: usize,
    pub success: bool,
    pub benchmark_cost: Option<f64>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub policy: String,
    pub runs: usize,
    pub successes: usize,
    pub mean_cost: f64,
    pub sd_cost: f64,
    /// Root mean squared deviation from the paired benchmark cost.
    pub error: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean_n_disamb: f64,
    pub mean_weight_used: f64,
    /// Mean of benchmark cost over realized cost.
    pub relative_efficiency: f64,
    pub constraint_satisfaction: f64,
}

/// Quantile by linear interpolation between order statistics (`h = (n-1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for a single value.
pub fn sd(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

pub fn within_budget(record: &ReplicationRecord, budget: &Budget) -> bool {
    match *budget {
        Budget::Simplified { n_max } => record.n_disamb <= n_max as usize,
        Budget::General { delta_max } => record.weight_used <= delta_max + WEIGHT_TOL,
    }
}

/// Summary rows per policy, in first-appearance order of the records.
pub fn summarize(scenario: &str, budget: &Budget, records: &[ReplicationRecord]) -> Vec<MetricsRow> {
    let mut policies: Vec<&str> = Vec::new();
    for r in records {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    policies
        .into_iter()
        .map(|policy| {
            let rows: Vec<&ReplicationRecord> = records.iter().filter(|r| r.policy == policy).collect();
            let ok: Vec<&ReplicationRecord> = rows.iter().copied().filter(|r| r.success).collect();
            let costs: Vec<f64> = ok.iter().map(|r| r.cost).collect();
            let mut sorted = costs.clone();
            sorted.sort_by(f64::total_cmp);
            let paired: Vec<(f64, f64)> = ok.iter().filter_map(|r| r.benchmark_cost.map(|b| (r.cost, b))).collect();
            let sq: Vec<f64> = paired.iter().map(|(c, b)| (c - b).powi(2)).collect();
            let eff: Vec<f64> = paired.iter().map(|(c, b)| b / c).collect();
            MetricsRow {
                scenario: scenario.to_string(),
                policy: policy.to_string(),
                runs: rows.len(),
                successes: ok.len(),
                mean_cost: mean(&costs),
                sd_cost: sd(&costs),
                error: mean(&sq).sqrt(),
                q25: quantile(&sorted, 0.25),
                q75: quantile(&sorted, 0.75),
                mean_n_disamb: mean(&ok.iter().map(|r| r.n_disamb as f64).collect::<Vec<_>>()),
                mean_weight_used: mean(&ok.iter().map(|r| r.weight_used).collect::<Vec<_>>()),
                relative_efficiency: mean(&eff),
                constraint_satisfaction: rows.iter().filter(|r| within_budget(r, budget)).count() as f64
                    / rows.len().max(1) as f64,
            }
        })
        .collect()
}

fn csv_err(e: csv::Error) -> RcdpError {
    RcdpError::Results(e.to_string())
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(csv_err)).collect()
}
