//! Seeded campaign runner and parameter sweeps.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cologr::{solve, Method, SolveStatus};
use crate::env::Environment;
use crate::error::Result;
use crate::experiments::metrics::{mean, sd, summarize, write_csv, MetricsRow, ReplicationRecord};
use crate::experiments::scenario::{Budget, CampaignSpec, ScenarioSpec};
use crate::graph::{AdjustedGraph, WeightRule};
use crate::lattice::LatticeGraph;
use crate::policy::{run_policy_on, PolicyConfig, PolicyKind};
use crate::risk::RiskModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock runtimes; off by default so outputs are byte-stable.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub scenario: String,
    pub replication: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub id: String,
    pub budget: Budget,
    pub records: Vec<ReplicationRecord>,
    pub metrics: Vec<MetricsRow>,
    pub failures: Vec<ReplicationFailure>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignResult {
    pub scenarios: Vec<ScenarioResult>,
}

impl CampaignResult {
    pub fn records(&self) -> Vec<ReplicationRecord> {
        self.scenarios.iter().flat_map(|s| s.records.iter().cloned()).collect()
    }

    pub fn metrics(&self) -> Vec<MetricsRow> {
        self.scenarios.iter().flat_map(|s| s.metrics.iter().cloned()).collect()
    }

    pub fn failures(&self) -> Vec<ReplicationFailure> {
        self.scenarios.iter().flat_map(|s| s.failures.iter().cloned()).collect()
    }

    /// Writes `replications.csv` and `summary.csv`, plus `failures.csv` when any
    /// replication failed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_csv(&self.records(), fs::File::create(dir.join("replications.csv"))?)?;
        write_csv(&self.metrics(), fs::File::create(dir.join("summary.csv"))?)?;
        let failures = self.failures();
        if !failures.is_empty() {
            write_csv(&failures, fs::File::create(dir.join("failures.csv"))?)?;
        }
        Ok(())
    }
}

fn elapsed_ms(start: Option<Instant>) -> f64 {
    start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3)
}

fn replication_records(
    spec: &ScenarioSpec,
    lattice: &Arc<LatticeGraph>,
    configs: &[PolicyConfig],
    rep: u64,
    opts: RunOptions,
) -> Result<Vec<ReplicationRecord>> {
    let env = spec.generate(rep)?;
    let bench_config = spec.config_for(PolicyKind::Benchmark);
    let mut records = Vec::with_capacity(configs.len() + 1);
    let mut benchmark = None;
    for config in std::iter::once(&bench_config).chain(configs) {
        let start = opts.timing.then(Instant::now);
        let out = run_policy_on(lattice, &env, config)?;
        let runtime_ms = elapsed_ms(start);
        if config.kind == PolicyKind::Benchmark {
            benchmark = out.success.then_some(out.realized_cost);
        }
        records.push(ReplicationRecord {
            scenario: spec.id.clone(),
            replication: rep,
            policy: config.kind.to_string(),
            cost: out.realized_cost,
            weight_used: out.disambiguation_cost,
            n_disamb: out.count_used(),
            success: out.success,
            benchmark_cost: benchmark,
            runtime_ms,
        });
    }
    Ok(records)
}

pub fn run_scenario(spec: &ScenarioSpec, opts: RunOptions) -> Result<ScenarioResult> {
    spec.validate()?;
    let lattice = Arc::new(LatticeGraph::build(&spec.layout.region, spec.layout.source, spec.layout.target)?);
    let configs: Vec<PolicyConfig> =
        spec.policy_configs()?.into_iter().filter(|c| c.kind != PolicyKind::Benchmark).collect();
    let per_rep: Vec<Result<Vec<ReplicationRecord>>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|rep| replication_records(spec, &lattice, &configs, rep, opts))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in per_rep.into_iter().enumerate() {
        match r {
            Ok(rows) => records.extend(rows),
            Err(e) => failures.push(ReplicationFailure {
                scenario: spec.id.clone(),
                replication: rep as u64,
                message: e.to_string(),
            }),
        }
    }
    let metrics = summarize(&spec.id, &spec.budget, &records);
    Ok(ScenarioResult { id: spec.id.clone(), budget: spec.budget, records, metrics, failures })
}

pub fn run_campaign(spec: &CampaignSpec, opts: RunOptions) -> Result<CampaignResult> {
    spec.validate()?;
    let scenarios = spec.scenarios.iter().map(|s| run_scenario(s, opts)).collect::<Result<_>>()?;
    Ok(CampaignResult { scenarios })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCell {
    pub alpha: f64,
    pub rho_t: f64,
    pub runs: usize,
    pub successes: usize,
    pub mean_cost: f64,
    pub sd_cost: f64,
}

/// Mean cost of the fixed-alpha policy over an (alpha, true proportion) grid. Every
/// cell reuses the base seed, so cells with the same proportion share layouts.
pub fn sweep_alpha(base: &ScenarioSpec, alphas: &[f64], rhos: &[f64], opts: RunOptions) -> Result<Vec<AlphaCell>> {
    let mut cells = Vec::new();
    for &rho_t in rhos {
        for &alpha in alphas {
            let mut spec = base.clone();
            spec.id = format!("{}-alpha{alpha}-rho{rho_t}", base.id);
            spec.rho_t = rho_t;
            spec.policies = vec![PolicyKind::Rcdp { risk: RiskModel::lu(alpha) }.to_string()];
            let result = run_scenario(&spec, opts)?;
            let row = result.metrics.iter().find(|m| m.policy != "benchmark").expect("policy row");
            cells.push(AlphaCell {
                alpha,
                rho_t,
                runs: row.runs,
                successes: row.successes,
                mean_cost: row.mean_cost,
                sd_cost: row.sd_cost,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorCell {
    pub precision: f64,
    pub runs: usize,
    pub successes: usize,
    pub mean_cost: f64,
    pub sd_cost: f64,
    pub mean_benchmark: f64,
    /// Mean paired difference between policy and benchmark cost.
    pub mean_gap: f64,
}

/// Bayesian-risk policy cost against the benchmark as the sensor sharpens. Layouts
/// and statuses are identical across precisions; only marks change.
pub fn sweep_sensor(base: &ScenarioSpec, precisions: &[f64], alpha_max: f64, opts: RunOptions) -> Result<Vec<SensorCell>> {
    let mut cells = Vec::new();
    for &precision in precisions {
        let mut spec = base.clone();
        spec.id = format!("{}-sensor{precision}", base.id);
        spec.sensor_precision = precision;
        spec.policies = vec![format!("rcdp:lu-bayes:{alpha_max}")];
        let result = run_scenario(&spec, opts)?;
        let policy: Vec<&ReplicationRecord> = result.records.iter().filter(|r| r.policy != "benchmark").collect();
        let ok: Vec<&&ReplicationRecord> = policy.iter().filter(|r| r.success).collect();
        let costs: Vec<f64> = ok.iter().map(|r| r.cost).collect();
        let bench: Vec<f64> = policy.iter().filter_map(|r| r.benchmark_cost).collect();
        let gaps: Vec<f64> = ok.iter().filter_map(|r| r.benchmark_cost.map(|b| r.cost - b)).collect();
        cells.push(SensorCell {
            precision,
            runs: policy.len(),
            successes: ok.len(),
            mean_cost: mean(&costs),
            sd_cost: sd(&costs),
            mean_benchmark: mean(&bench),
            mean_gap: mean(&gaps),
        });
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRecord {
    pub scenario: String,
    pub replication: u64,
    pub method: Method,
    pub status: SolveStatus,
    pub cost: Option<f64>,
    pub weight: Option<f64>,
    pub duality_gap: f64,
    pub graph_size_before: usize,
    pub graph_size_after: usize,
    pub iterations: usize,
    pub cogr_eliminations: usize,
    pub logr_eliminations: usize,
}

/// The planning graph a policy sees at the start of a traversal.
pub fn planning_graph(env: &Environment, lattice: Arc<LatticeGraph>, risk: &RiskModel, budget: &Budget) -> Result<(AdjustedGraph, f64)> {
    let (rule, limit) = match *budget {
        Budget::Simplified { n_max } => (WeightRule::UnitCount, n_max as f64),
        Budget::General { delta_max } => (WeightRule::DisambCost, delta_max),
    };
    Ok((AdjustedGraph::initialize(lattice, env, risk, rule)?, limit))
}

/// Both reduction methods on the source-to-target problem of every replication.
pub fn compare_reduction(spec: &ScenarioSpec, risk: &RiskModel) -> Result<Vec<ReductionRecord>> {
    spec.validate()?;
    let lattice = Arc::new(LatticeGraph::build(&spec.layout.region, spec.layout.source, spec.layout.target)?);
    let per_rep: Vec<Result<Vec<ReductionRecord>>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let env = spec.generate(rep)?;
            let (g, limit) = planning_graph(&env, lattice.clone(), risk, &spec.budget)?;
            Ok([Method::Cologr, Method::Sne]
                .into_iter()
                .map(|method| {
                    let r = solve(&g, g.source(), g.target(), limit, method);
                    let feasible = r.status.is_feasible();
                    ReductionRecord {
                        scenario: spec.id.clone(),
                        replication: rep,
                        method,
                        status: r.status,
                        cost: feasible.then_some(r.solution.cost),
                        weight: feasible.then_some(r.solution.weight),
                        duality_gap: r.duality_gap,
                        graph_size_before: r.graph_size_before,
                        graph_size_after: r.graph_size_after,
                        iterations: r.iterations,
                        cogr_eliminations: r.cogr_eliminations,
                        logr_eliminations: r.logr_eliminations,
                    }
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_rep {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::metrics::read_csv;
    use crate::experiments::scenario::Spatial;

    fn small(n: usize, budget: Budget) -> ScenarioSpec {
        let mut s = ScenarioSpec::new("small", n, budget);
        s.spatial = Spatial::Strauss { r_inhibit: 7.0, gamma: 0.5, sweeps: 20 };
        s.replications = 4;
        s.seed = 5;
        s.policies = vec!["greedy-rd".into(), "rcdp:lu:15".into()];
        s
    }

    #[test]
    fn zero_obstacles_give_straight_line() {
        let spec = small(0, Budget::General { delta_max: 4.0 });
        let r = run_scenario(&spec, RunOptions::default()).unwrap();
        for m in &r.metrics {
            assert_eq!(m.mean_cost, 24.0);
            assert_eq!(m.error, 0.0);
            assert_eq!(m.successes, 4);
        }
    }

    #[test]
    fn records_are_paired_and_ordered() {
        let spec = small(20, Budget::General { delta_max: 4.0 });
        let r = run_scenario(&spec, RunOptions::default()).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.records.len(), 4 * 3);
        for (k, chunk) in r.records.chunks(3).enumerate() {
            assert_eq!(chunk[0].policy, "benchmark");
            assert!(chunk.iter().all(|c| c.replication == k as u64));
            assert!(chunk.iter().all(|c| c.benchmark_cost == chunk[0].benchmark_cost));
            assert!(chunk.iter().all(|c| c.weight_used <= 4.0 + 1e-9));
        }
    }

    #[test]
    fn summary_recomputes_from_csv() {
        let spec = small(20, Budget::Simplified { n_max: 1 });
        let dir = tempfile::tempdir().unwrap();
        let result = CampaignResult { scenarios: vec![run_scenario(&spec, RunOptions::default()).unwrap()] };
        result.write(dir.path()).unwrap();
        let records: Vec<ReplicationRecord> = read_csv(fs::File::open(dir.path().join("replications.csv")).unwrap()).unwrap();
        let summary: Vec<MetricsRow> = read_csv(fs::File::open(dir.path().join("summary.csv")).unwrap()).unwrap();
        let again = summarize(&spec.id, &spec.budget, &records);
        // NaN-free here, so exact equality is meaningful
        assert_eq!(format!("{summary:?}"), format!("{again:?}"));
    }

    #[test]
    fn sweeps_run() {
        let base = small(20, Budget::General { delta_max: 4.0 });
        let cells = sweep_alpha(&base, &[5.0, 15.0], &[0.2], RunOptions::default()).unwrap();
        assert_eq!(cells.len(), 2);
        let cells = sweep_sensor(&base, &[0.0, 4.0], 60.0, RunOptions::default()).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].mean_benchmark, cells[1].mean_benchmark);
    }

    #[test]
    fn reduction_records_per_method() {
        let spec = small(20, Budget::General { delta_max: 4.0 });
        let rows = compare_reduction(&spec, &RiskModel::lu(15.0)).unwrap();
        assert_eq!(rows.len(), 8);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].method, Method::Cologr);
            if let (Some(a), Some(b)) = (pair[0].cost, pair[1].cost) {
                assert!(a <= b + 1e-9);
            }
        }
    }
}
