//! Command-line front end. `main` forwards to [`run`].
//!
//! Exit codes: 0 success, 2 infeasible or failed traversal, 3 parse or configuration
//! error, 4 internal error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cologr::{solve, Method, SolveReport, SolveStatus};
use crate::env::Environment;
use crate::error::RcdpError;
use crate::experiments::{
    compare_reduction, metrics::write_csv, run_campaign, sweep_alpha, sweep_sensor, Budget, CampaignSpec, CostRule,
    Layout, RunOptions, ScenarioSpec,
};
use crate::graph::{AdjustedGraph, WeightRule};
use crate::lattice::LatticeGraph;
use crate::policy::{run_policy, PolicyConfig, PolicyKind};
use crate::report::write_report;
use crate::risk::RiskModel;
use crate::spp::wcspp_oracle;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rcdp", version, about = "Budget-constrained path planning through uncertain obstacles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one environment as JSON.
    GenEnv(GenEnvArgs),
    /// Solve the constrained planning problem on an environment.
    Solve(SolveArgs),
    /// Run one policy against an environment's ground truth and print its event log.
    Traverse(TraverseArgs),
    /// Run a campaign and write replications.csv and summary.csv.
    Simulate(SimulateArgs),
    /// Mean cost of fixed-alpha planning over an (alpha, true proportion) grid.
    SweepAlpha(SweepAlphaArgs),
    /// Bayesian-risk planning against the benchmark as sensor precision varies.
    SweepSensor(SweepSensorArgs),
    /// Graph size, duality gap, and cost of both elimination methods.
    CompareReduction(CompareArgs),
    /// SVG charts and a markdown table from a results directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CostRuleArg {
    Uniform5,
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Cologr,
    Sne,
}

/// Budget flags; at most one may be given.
#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Total disambiguation cost budget.
    #[arg(long, conflicts_with = "n_max")]
    pub delta_max: Option<f64>,
    /// Cap on the number of disambiguations.
    #[arg(long)]
    pub n_max: Option<u32>,
}

impl BudgetArgs {
    fn budget(&self) -> Option<Budget> {
        match (self.delta_max, self.n_max) {
            (Some(delta_max), _) => Some(Budget::General { delta_max }),
            (_, Some(n_max)) => Some(Budget::Simplified { n_max }),
            _ => None,
        }
    }

    fn required(&self) -> Result<Budget, CliError> {
        self.budget().ok_or_else(|| CliError::config("one of --delta-max or --n-max is required"))
    }
}

/// Scenario flags. With `--config`, the file supplies the base values and any flag
/// given explicitly overrides the matching field of every scenario.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// TOML campaign file with one or more `[[scenario]]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run the fifteen-setting density/budget grid.
    #[arg(long, conflicts_with = "config")]
    pub standard_grid: bool,
    /// Scenario id when building from flags.
    #[arg(long)]
    pub id: Option<String>,
    /// Number of obstacles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Proportion of true obstacles.
    #[arg(long)]
    pub rho_t: Option<f64>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, value_enum)]
    pub cost_rule: Option<CostRuleArg>,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    /// Sensor precision in [0, 4].
    #[arg(long)]
    pub sensor_precision: Option<f64>,
    /// Comma-separated policy names, e.g. `greedy-rd,rcdp:lu:15`.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioArgs {
    fn layout(&self) -> Option<Layout> {
        self.layout.map(|l| match l {
            LayoutArg::Desk => Layout::desk(),
            LayoutArg::Full => Layout::full(),
        })
    }

    fn apply(&self, s: &mut ScenarioSpec) {
        if let Some(n) = self.n {
            s.n = n;
        }
        if let Some(r) = self.rho_t {
            s.rho_t = r;
        }
        if let Some(b) = self.budget.budget() {
            s.budget = b;
        }
        if let Some(c) = self.cost_rule {
            s.cost_rule = match c {
                CostRuleArg::Uniform5 => CostRule::Uniform5,
                CostRuleArg::Heterogeneous => CostRule::Heterogeneous,
            };
        }
        if let Some(l) = self.layout() {
            s.layout = l;
        }
        if let Some(p) = self.sensor_precision {
            s.sensor_precision = p;
        }
        if let Some(p) = &self.policies {
            s.policies = p.clone();
        }
        if let Some(r) = self.replications {
            s.replications = r;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
    }

    pub fn campaign(&self) -> Result<CampaignSpec, CliError> {
        let mut spec = if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let spec: CampaignSpec = toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            spec
        } else if self.standard_grid {
            CampaignSpec::standard_grid(self.layout().unwrap_or_else(Layout::desk), self.replications.unwrap_or(20), self.seed.unwrap_or(0))
        } else {
            let budget = self.budget.required()?;
            let id = self.id.clone().unwrap_or_else(|| format!("n{}-{}", self.n.unwrap_or(20), budget.label()));
            CampaignSpec { name: id.clone(), scenarios: vec![ScenarioSpec::new(id, self.n.unwrap_or(20), budget)] }
        };
        for s in &mut spec.scenarios {
            self.apply(s);
        }
        spec.validate().map_err(CliError::from)?;
        Ok(spec)
    }

    /// The single scenario a sweep runs on.
    pub fn scenario(&self) -> Result<ScenarioSpec, CliError> {
        let spec = self.campaign()?;
        match spec.scenarios.len() {
            1 => Ok(spec.scenarios.into_iter().next().expect("one scenario")),
            n => Err(CliError::config(format!("expected exactly one scenario, found {n}"))),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenEnvArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Replication index within the scenario.
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    /// Emit the built-in six-obstacle example instead.
    #[arg(long, conflicts_with_all = ["config", "standard_grid"])]
    pub toy: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub env: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Risk model: rd | dt | lu:<alpha> | lu-delta | lu-bayes:<alpha_max>.
    #[arg(long, default_value = "lu:15")]
    pub risk: String,
    #[arg(long, value_enum, default_value = "cologr")]
    pub method: MethodArg,
    /// Also run the exact label-setting oracle and report agreement.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraverseArgs {
    #[arg(long)]
    pub env: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Policy name: greedy-rd | greedy-dt | benchmark | rcdp:<risk>.
    #[arg(long, default_value = "rcdp:lu:15")]
    pub policy: String,
    /// Event log file (JSON lines); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Record wall-clock runtimes (makes outputs run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepAlphaArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,30,45,60")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.5,0.8,1")]
    pub rhos: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepSensorArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2,2.5,3,3.5,4")]
    pub precisions: Vec<f64>,
    #[arg(long, default_value_t = 60.0)]
    pub alpha_max: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "lu:15")]
    pub risk: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding summary.csv and replications.csv.
    #[arg(long)]
    pub results: PathBuf,
    /// Output directory; defaults to the results directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<RcdpError> for CliError {
    fn from(e: RcdpError) -> Self {
        let code = match e {
            RcdpError::InvalidRegion(_)
            | RcdpError::InvalidEnvironment(_)
            | RcdpError::DegenerateEndpoints
            | RcdpError::OutsideRegion { .. }
            | RcdpError::InvalidRiskModel(_)
            | RcdpError::ObstacleAtTarget(_)
            | RcdpError::Config(_)
            | RcdpError::Results(_)
            | RcdpError::Json(_)
            | RcdpError::OracleScaleLimit { .. }
            | RcdpError::EnumerationGuard { .. } => EXIT_CONFIG,
            _ => EXIT_INTERNAL,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_INTERNAL, message: e.to_string() }
    }
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_env(path: &Path) -> Result<Environment, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Environment::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn parse_risk(text: &str) -> Result<RiskModel, CliError> {
    Ok(text.parse::<RiskModel>()?.with_default_prior(0.2))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError { code: EXIT_INTERNAL, message: e.to_string() })
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_csv(rows, fs::File::create(dir.join(name))?)?;
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    #[serde(flatten)]
    report: SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_agrees: Option<bool>,
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::GenEnv(a) => {
            let env = if a.toy {
                Environment::toy()
            } else {
                a.scenario.scenario()?.generate(a.replication)?
            };
            emit(a.out.as_deref(), &env.to_json()?)?;
            Ok(EXIT_OK)
        }
        Command::Solve(a) => {
            let env = load_env(&a.env)?;
            let risk = parse_risk(&a.risk)?;
            let (rule, limit) = match a.budget.required()? {
                Budget::General { delta_max } => (WeightRule::DisambCost, delta_max),
                Budget::Simplified { n_max } => (WeightRule::UnitCount, n_max as f64),
            };
            let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target)?);
            let g = AdjustedGraph::initialize(lattice, &env, &risk, rule)?;
            let method = match a.method {
                MethodArg::Cologr => Method::Cologr,
                MethodArg::Sne => Method::Sne,
            };
            let report = solve(&g, g.source(), g.target(), limit, method);
            let (oracle_cost, oracle_agrees) = if a.oracle {
                let o = wcspp_oracle(&g, g.source(), g.target(), limit)?;
                let agrees = if o.exists {
                    report.status.is_feasible() && (report.solution.cost - o.cost).abs() <= 1e-9
                } else {
                    !report.status.is_feasible()
                };
                (o.exists.then_some(o.cost), Some(agrees))
            } else {
                (None, None)
            };
            let infeasible = report.status == SolveStatus::Infeasible;
            emit(a.out.as_deref(), &json(&SolveOutput { report, oracle_cost, oracle_agrees })?)?;
            Ok(if infeasible { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Traverse(a) => {
            let env = load_env(&a.env)?;
            let kind: PolicyKind = a.policy.parse()?;
            let kind = match kind {
                PolicyKind::Rcdp { risk } => PolicyKind::Rcdp { risk: risk.with_default_prior(0.2) },
                k => k,
            };
            let config = match a.budget.required()? {
                Budget::General { delta_max } => PolicyConfig::new(kind, delta_max),
                Budget::Simplified { n_max } => PolicyConfig::counted(kind, n_max),
            };
            let outcome = run_policy(&env, &config)?;
            emit(a.out.as_deref(), &outcome.event_log()?)?;
            eprintln!(
                "success={} cost={:.6} length={:.6} disambiguation={:.6} count={} replans={}",
                outcome.success,
                outcome.realized_cost,
                outcome.walked_length,
                outcome.disambiguation_cost,
                outcome.count_used(),
                outcome.replans
            );
            Ok(if outcome.success { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Simulate(a) => {
            let spec = a.scenario.campaign()?;
            let result = run_campaign(&spec, RunOptions { timing: a.timing })?;
            result.write(&a.out)?;
            fs::write(a.out.join("campaign.toml"), spec.to_toml()?)?;
            let failures = result.failures().len();
            eprintln!("{} scenarios, {} records, {failures} failed replications", spec.scenarios.len(), result.records().len());
            Ok(EXIT_OK)
        }
        Command::SweepAlpha(a) => {
            let base = a.scenario.scenario()?;
            let cells = sweep_alpha(&base, &a.alphas, &a.rhos, RunOptions::default())?;
            write_rows(&a.out, "alpha_sweep.csv", &cells)?;
            Ok(EXIT_OK)
        }
        Command::SweepSensor(a) => {
            let base = a.scenario.scenario()?;
            let cells = sweep_sensor(&base, &a.precisions, a.alpha_max, RunOptions::default())?;
            write_rows(&a.out, "sensor_sweep.csv", &cells)?;
            Ok(EXIT_OK)
        }
        Command::CompareReduction(a) => {
            let spec = a.scenario.campaign()?;
            let risk = parse_risk(&a.risk)?;
            let mut rows = Vec::new();
            for s in &spec.scenarios {
                rows.extend(compare_reduction(s, &risk)?);
            }
            write_rows(&a.out, "reduction.csv", &rows)?;
            for method in [Method::Cologr, Method::Sne] {
                let m: Vec<_> = rows.iter().filter(|r| r.method == method).collect();
                let zero = m.iter().filter(|r| r.duality_gap.abs() <= 1e-9).count();
                let size = m.iter().map(|r| r.graph_size_after as f64).sum::<f64>() / m.len().max(1) as f64;
                eprintln!("{method:?}: {} instances, zero gap {zero}, mean final graph size {size:.1}", m.len());
            }
            Ok(EXIT_OK)
        }
        Command::Report(a) => {
            let out = a.out.unwrap_or_else(|| a.results.clone());
            for f in write_report(&a.results, &out)? {
                eprintln!("wrote {}", f.display());
            }
            Ok(EXIT_OK)
        }
    }
}
