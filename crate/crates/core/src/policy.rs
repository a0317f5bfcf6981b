//! Online traversal against a hidden ground truth: the budget-aware policy, greedy
//! penalty baselines, and the full-information benchmark, plus expected-cost evaluation
//! over status realizations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cologr::cologr_solve;
use crate::env::{Environment, Knowledge, ObstacleStatus};
use crate::error::{RcdpError, Result};
use crate::graph::{AdjustedGraph, WeightRule};
use crate::lattice::{LatticeGraph, VertexId};
use crate::risk::RiskModel;
use crate::spp::{shortest_path, Valuation, WEIGHT_TOL};

/// Status assignments are enumerated exhaustively up to this many ambiguous obstacles.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Rcdp { risk: RiskModel },
    GreedyRd,
    GreedyDt,
    Benchmark,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Rcdp { risk } => write!(f, "rcdp:{risk}"),
            PolicyKind::GreedyRd => write!(f, "greedy-rd"),
            PolicyKind::GreedyDt => write!(f, "greedy-dt"),
            PolicyKind::Benchmark => write!(f, "benchmark"),
        }
    }
}

/// `greedy-rd | greedy-dt | benchmark | rcdp:<risk>`
impl FromStr for PolicyKind {
    type Err = RcdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "greedy-rd" => Ok(PolicyKind::GreedyRd),
            "greedy-dt" => Ok(PolicyKind::GreedyDt),
            "benchmark" => Ok(PolicyKind::Benchmark),
            other => match other.strip_prefix("rcdp:") {
                Some(risk) => Ok(PolicyKind::Rcdp { risk: risk.parse()? }),
                None => Err(RcdpError::Config(format!("unknown policy `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub delta_max: f64,
    /// Count cap on disambiguations; when set, `delta_max` is ignored.
    pub n_max: Option<u32>,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, delta_max: f64) -> Self {
        Self { kind, delta_max, n_max: None }
    }

    pub fn counted(kind: PolicyKind, n_max: u32) -> Self {
        Self { kind, delta_max: 0.0, n_max: Some(n_max) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.n_max {
            Some(n) => n >= 1,
            None => self.delta_max.is_finite() && self.delta_max >= 0.0,
        };
        if !ok {
            return Err(RcdpError::Config(format!("invalid budget: delta_max {} n_max {:?}", self.delta_max, self.n_max)));
        }
        if let PolicyKind::Rcdp { risk } = &self.kind {
            risk.validate()?;
        }
        Ok(())
    }

    fn budget(&self) -> f64 {
        self.n_max.map_or(self.delta_max, f64::from)
    }

    fn rule(&self) -> WeightRule {
        if self.n_max.is_some() {
            WeightRule::UnitCount
        } else {
            WeightRule::DisambCost
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraversalEvent {
    Plan { at: VertexId, planned_cost: f64, planned_weight: f64 },
    Move { from: VertexId, to: VertexId, length: f64 },
    Disambiguate { at: VertexId, obstacle: u32, result: ObstacleStatus, cost: f64, budget_after: f64 },
    /// Obstacle too expensive for the remaining budget; treated as blocking.
    Avoid { at: VertexId, obstacle: u32 },
    Stuck { at: VertexId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalOutcome {
    pub walked: Vec<VertexId>,
    pub walked_length: f64,
    pub disambiguation_cost: f64,
    pub realized_cost: f64,
    pub disambiguations: Vec<(u32, ObstacleStatus)>,
    pub budget_remaining: f64,
    pub replans: usize,
    pub success: bool,
    pub events: Vec<TraversalEvent>,
}

impl TraversalOutcome {
    pub fn count_used(&self) -> usize {
        self.disambiguations.len()
    }

    /// Events as JSON lines.
    pub fn event_log(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Planner {
    Constrained,
    Unconstrained,
}

pub fn run_policy(env: &Environment, config: &PolicyConfig) -> Result<TraversalOutcome> {
    run_policy_on(&Arc::new(LatticeGraph::build(&env.region, env.source, env.target)?), env, config)
}

/// As [`run_policy`] with a prebuilt lattice, for batches over one region.
pub fn run_policy_on(lattice: &Arc<LatticeGraph>, env: &Environment, config: &PolicyConfig) -> Result<TraversalOutcome> {
    config.validate()?;
    let rule = config.rule();
    let (graph, planner) = match &config.kind {
        PolicyKind::Rcdp { risk } => (AdjustedGraph::initialize(lattice.clone(), env, risk, rule)?, Planner::Constrained),
        PolicyKind::GreedyRd => (AdjustedGraph::initialize(lattice.clone(), env, &RiskModel::rd(), rule)?, Planner::Unconstrained),
        PolicyKind::GreedyDt => (AdjustedGraph::initialize(lattice.clone(), env, &RiskModel::dt(), rule)?, Planner::Unconstrained),
        PolicyKind::Benchmark => {
            // full information: true obstacles are known walls, false ones cost their
            // disambiguation price as penalty and still have to be paid for when crossed
            let mut known = env.clone();
            for o in &mut known.obstacles {
                if o.status.is_blocking() {
                    o.knowledge = Knowledge::ResolvedTrue;
                }
            }
            (AdjustedGraph::initialize_with(lattice.clone(), &known, rule, |o| Ok(o.disamb_cost))?, Planner::Constrained)
        }
    };
    Ok(traverse(env, graph, planner, config.budget(), config.n_max.is_some()))
}

pub fn run_rcdp(env: &Environment, config: &PolicyConfig, risk: &RiskModel) -> Result<TraversalOutcome> {
    run_policy(env, &PolicyConfig { kind: PolicyKind::Rcdp { risk: *risk }, ..config.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyVariant {
    Rd,
    Dt,
}

pub fn run_greedy(env: &Environment, config: &PolicyConfig, variant: GreedyVariant) -> Result<TraversalOutcome> {
    let kind = match variant {
        GreedyVariant::Rd => PolicyKind::GreedyRd,
        GreedyVariant::Dt => PolicyKind::GreedyDt,
    };
    run_policy(env, &PolicyConfig { kind, ..config.clone() })
}

pub fn run_benchmark(env: &Environment, config: &PolicyConfig) -> Result<TraversalOutcome> {
    run_policy(env, &PolicyConfig { kind: PolicyKind::Benchmark, ..config.clone() })
}

fn traverse(env: &Environment, mut g: AdjustedGraph, planner: Planner, budget: f64, counted: bool) -> TraversalOutcome {
    let t = g.target();
    let mut out = TraversalOutcome {
        walked: vec![g.source()],
        walked_length: 0.0,
        disambiguation_cost: 0.0,
        realized_cost: 0.0,
        disambiguations: Vec::new(),
        budget_remaining: budget,
        replans: 0,
        success: false,
        events: Vec::new(),
    };
    let mut cur = g.source();
    let mut plans = 0usize;
    // remaining planned vertices, next hop last
    let mut plan: Vec<VertexId> = Vec::new();
    while cur != t {
        if plan.is_empty() {
            let path = match planner {
                Planner::Constrained => {
                    let report = cologr_solve(&g, cur, t, out.budget_remaining);
                    report.status.is_feasible().then_some(report.solution)
                }
                Planner::Unconstrained => Some(shortest_path(&g, cur, t, Valuation::Composite(0.0))).filter(|p| p.exists),
            };
            let Some(path) = path else {
                out.events.push(TraversalEvent::Stuck { at: cur });
                break;
            };
            plans += 1;
            out.events.push(TraversalEvent::Plan { at: cur, planned_cost: path.cost, planned_weight: path.weight });
            plan = path.vertices.into_iter().skip(1).rev().collect();
        }
        let next = *plan.last().expect("plan reaches the target");
        let e = g.lattice().edge_between(cur, next).expect("plan follows lattice edges");

        let mut blocked = false;
        let ambiguous = g.ambiguous_on_edge(e);
        for &id in &ambiguous {
            let price = if counted { 1.0 } else { env.obstacle(id).expect("graph built from env").disamb_cost };
            if price > out.budget_remaining + WEIGHT_TOL {
                g.avoid(id).expect("known obstacle");
                out.events.push(TraversalEvent::Avoid { at: cur, obstacle: id });
                blocked = true;
                break;
            }
            let truth = env.obstacle(id).expect("graph built from env").status;
            g.apply_disambiguation(id, truth).expect("ambiguous obstacle");
            out.budget_remaining -= price;
            out.disambiguation_cost += env.obstacle(id).expect("graph built from env").disamb_cost;
            out.disambiguations.push((id, truth));
            out.events.push(TraversalEvent::Disambiguate {
                at: cur,
                obstacle: id,
                result: truth,
                cost: price,
                budget_after: out.budget_remaining,
            });
            if truth.is_blocking() {
                blocked = true;
                break;
            }
        }
        if !ambiguous.is_empty() {
            // knowledge changed: the cached plan is stale
            plan.clear();
        }
        if blocked {
            continue;
        }
        plan.pop();
        let length = g.edge_length(e);
        out.walked_length += length;
        out.walked.push(next);
        out.events.push(TraversalEvent::Move { from: cur, to: next, length });
        cur = next;
    }
    out.success = cur == t;
    out.replans = plans.saturating_sub(1);
    out.realized_cost = out.walked_length + out.disambiguation_cost;
    out
}

/// Exact expectation of `leaf` over independent statuses, `probs[i]` being the
/// probability that item `i` is true. `leaf` receives one flag per item.
pub fn expected_over_statuses(probs: &[f64], mut leaf: impl FnMut(&[bool]) -> Result<f64>) -> Result<f64> {
    let k = probs.len();
    if k > ENUMERATION_LIMIT {
        return Err(RcdpError::EnumerationGuard { ambiguous: k, limit: ENUMERATION_LIMIT });
    }
    let mut flags = vec![false; k];
    let mut total = 0.0;
    for mask in 0u64..(1u64 << k) {
        let mut p = 1.0;
        for (i, f) in flags.iter_mut().enumerate() {
            *f = mask >> i & 1 == 1;
            p *= if *f { probs[i] } else { 1.0 - probs[i] };
        }
        if p == 0.0 {
            continue;
        }
        total += p * leaf(&flags)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub mean: f64,
    /// Zero for exact enumeration.
    pub std_error: f64,
    pub samples: usize,
}

/// Expected realized cost of `policy` when every ambiguous obstacle's status is drawn
/// independently with probability equal to its mark. Failed traversals contribute
/// `f64::INFINITY`.
///
/// With `samples = None` the expectation is exact and limited to
/// [`ENUMERATION_LIMIT`] ambiguous obstacles; otherwise a Monte Carlo estimate.
pub fn evaluate_expected<R: Rng>(
    env: &Environment,
    config: &PolicyConfig,
    samples: Option<(usize, &mut R)>,
) -> Result<Expectation> {
    let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target)?);
    let ambiguous: Vec<usize> =
        (0..env.obstacles.len()).filter(|&k| env.obstacles[k].knowledge == Knowledge::Ambiguous).collect();
    let probs: Vec<f64> = ambiguous.iter().map(|&k| env.obstacles[k].mark).collect();
    let mut realized = env.clone();
    let mut run = |flags: &[bool]| -> Result<f64> {
        for (&k, &f) in ambiguous.iter().zip(flags) {
            realized.obstacles[k].status = if f { ObstacleStatus::True } else { ObstacleStatus::False };
        }
        let out = run_policy_on(&lattice, &realized, config)?;
        Ok(if out.success { out.realized_cost } else { f64::INFINITY })
    };
    match samples {
        None => Ok(Expectation { mean: expected_over_statuses(&probs, run)?, std_error: 0.0, samples: 0 }),
        Some((n, rng)) => {
            if n < 2 {
                return Err(RcdpError::Config("Monte Carlo estimate needs at least 2 samples".into()));
            }
            let mut flags = vec![false; probs.len()];
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                for (f, &p) in flags.iter_mut().zip(&probs) {
                    *f = rng.gen::<f64>() < p;
                }
                values.push(run(&flags)?);
            }
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Ok(Expectation { mean, std_error: (var / n as f64).sqrt(), samples: n })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Obstacle, Region};
    use crate::geometry::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(w: f64, h: f64, s: (f64, f64), t: (f64, f64), obstacles: Vec<Obstacle>) -> Environment {
        Environment::new(Region::new(0.0, w, 0.0, h).unwrap(), obstacles, s.into(), t.into()).unwrap()
    }

    fn ob(id: u32, x: f64, y: f64, r: f64, status: ObstacleStatus, mark: f64, delta: f64) -> Obstacle {
        Obstacle::new(id, Point::new(x, y), r, status, mark, delta)
    }

    fn all_policies(budget: f64) -> Vec<PolicyConfig> {
        vec![
            PolicyConfig::new(PolicyKind::Rcdp { risk: RiskModel::lu(15.0) }, budget),
            PolicyConfig::new(PolicyKind::GreedyRd, budget),
            PolicyConfig::new(PolicyKind::GreedyDt, budget),
            PolicyConfig::new(PolicyKind::Benchmark, budget),
        ]
    }

    fn check_outcome(env: &Environment, out: &TraversalOutcome, budget: f64) {
        let lattice = LatticeGraph::build(&env.region, env.source, env.target).unwrap();
        let length: f64 = out.walked.windows(2).map(|w| lattice.edge(lattice.edge_between(w[0], w[1]).unwrap()).length).sum();
        let paid: f64 = out.disambiguations.iter().map(|(id, _)| env.obstacle(*id).unwrap().disamb_cost).sum();
        assert!((out.realized_cost - (length + paid)).abs() < 1e-9);
        assert!(paid <= budget + 1e-9);
        let mut ids: Vec<u32> = out.disambiguations.iter().map(|d| d.0).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), out.disambiguations.len());
    }

    #[test]
    fn obstacle_free_walks_straight() {
        let e = env(10.0, 10.0, (5.0, 10.0), (5.0, 0.0), vec![]);
        for c in all_policies(3.0) {
            let out = run_policy(&e, &c).unwrap();
            assert!(out.success);
            assert_eq!(out.walked.len(), 11);
            assert_eq!(out.realized_cost, 10.0);
            assert!(out.disambiguations.is_empty());
        }
    }

    /// Band of obstacles across a 9x9 grid; a cheap false obstacle sits in the middle
    /// gap and the band ends are expensive true obstacles.
    fn wall(status: ObstacleStatus) -> Environment {
        let obstacles = vec![
            ob(0, 1.0, 4.0, 2.2, ObstacleStatus::True, 0.9, 9.0),
            ob(1, 4.0, 4.0, 1.2, status, 0.2, 1.0),
            ob(2, 7.0, 4.0, 2.2, ObstacleStatus::True, 0.9, 9.0),
        ];
        env(8.0, 8.0, (4.0, 8.0), (4.0, 0.0), obstacles)
    }

    #[test]
    fn wall_single_disambiguation() {
        let e = wall(ObstacleStatus::False);
        let out = run_policy(&e, &PolicyConfig::new(PolicyKind::Rcdp { risk: RiskModel::lu(15.0) }, 2.0)).unwrap();
        assert!(out.success);
        assert_eq!(out.disambiguations, vec![(1, ObstacleStatus::False)]);
        check_outcome(&e, &out, 2.0);
    }

    #[test]
    fn wall_blocked_gap_fails_cleanly() {
        let e = wall(ObstacleStatus::True);
        let out = run_policy(&e, &PolicyConfig::new(PolicyKind::Rcdp { risk: RiskModel::lu(15.0) }, 2.0)).unwrap();
        assert!(!out.success);
        assert_eq!(out.disambiguations, vec![(1, ObstacleStatus::True)]);
        assert!(matches!(out.events.last(), Some(TraversalEvent::Stuck { .. })));
        check_outcome(&e, &out, 2.0);
    }

    #[test]
    fn exhausted_greedy_cannot_pass() {
        let e = wall(ObstacleStatus::False);
        let out = run_policy(&e, &PolicyConfig::new(PolicyKind::GreedyRd, 0.5)).unwrap();
        assert!(!out.success);
        assert!(out.disambiguations.is_empty());
        assert!(out.events.iter().any(|ev| matches!(ev, TraversalEvent::Avoid { obstacle: 1, .. })));
    }

    #[test]
    fn benchmark_crosses_cheap_false_obstacle() {
        let e = env(10.0, 10.0, (5.0, 10.0), (5.0, 0.0), vec![ob(0, 5.0, 5.0, 3.0, ObstacleStatus::False, 0.9, 0.25)]);
        let out = run_benchmark(&e, &PolicyConfig::new(PolicyKind::Benchmark, 5.0)).unwrap();
        assert!(out.success);
        assert_eq!(out.disambiguations, vec![(0, ObstacleStatus::False)]);
        assert_eq!(out.realized_cost, 10.25);
    }

    #[test]
    fn benchmark_all_blocked() {
        let e = env(10.0, 4.0, (5.0, 4.0), (5.0, 0.0), vec![ob(0, 5.0, 2.0, 7.0, ObstacleStatus::True, 0.1, 1.0)]);
        let out = run_benchmark(&e, &PolicyConfig::new(PolicyKind::Benchmark, 5.0)).unwrap();
        assert!(!out.success);
        assert!(out.disambiguations.is_empty());
    }

    #[test]
    fn count_mode_limits_disambiguations() {
        let obstacles = (0..3).map(|k| ob(k, 5.0, 2.0 + 3.0 * k as f64, 1.0, ObstacleStatus::False, 0.05, 5.0)).collect();
        let e = env(10.0, 10.0, (5.0, 10.0), (5.0, 0.0), obstacles);
        for n in 1..=3 {
            for c in all_policies(0.0) {
                let c = PolicyConfig { n_max: Some(n), ..c };
                let out = run_policy(&e, &c).unwrap();
                assert!(out.success);
                assert!(out.count_used() <= n as usize);
            }
        }
    }

    #[test]
    fn two_branch_expectation() {
        let v = expected_over_statuses(&[0.3], |f| Ok(if f[0] { 14.0 } else { 10.0 })).unwrap();
        assert!((v - 11.2).abs() < 1e-12);
    }

    #[test]
    fn enumeration_guard() {
        let probs = vec![0.5; ENUMERATION_LIMIT + 1];
        assert!(matches!(expected_over_statuses(&probs, |_| Ok(0.0)), Err(RcdpError::EnumerationGuard { .. })));
    }

    #[test]
    fn exact_and_sampled_expectations_agree() {
        let obstacles = vec![
            ob(0, 3.0, 5.0, 1.5, ObstacleStatus::False, 0.6, 1.0),
            ob(1, 6.0, 5.0, 1.5, ObstacleStatus::False, 0.3, 1.0),
            ob(2, 9.0, 5.0, 1.5, ObstacleStatus::False, 0.5, 2.0),
        ];
        let e = env(12.0, 10.0, (6.0, 10.0), (6.0, 0.0), obstacles);
        let c = PolicyConfig::new(PolicyKind::Rcdp { risk: RiskModel::lu(15.0) }, 2.0);
        let exact = evaluate_expected::<ChaCha8Rng>(&e, &c, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mc = evaluate_expected(&e, &c, Some((400, &mut rng))).unwrap();
        assert!(exact.mean.is_finite());
        assert!((mc.mean - exact.mean).abs() < 4.0 * mc.std_error + 1e-9, "{exact:?} {mc:?}");
    }

    #[test]
    fn event_log_is_json_lines() {
        let e = wall(ObstacleStatus::False);
        let out = run_policy(&e, &PolicyConfig::new(PolicyKind::Rcdp { risk: RiskModel::lu(15.0) }, 2.0)).unwrap();
        let log = out.event_log().unwrap();
        assert_eq!(log.lines().count(), out.events.len());
        for line in log.lines() {
            let _: TraversalEvent = serde_json::from_str(line).unwrap();
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for name in ["greedy-rd", "greedy-dt", "benchmark", "rcdp:lu:15", "rcdp:lu-delta", "rcdp:dt", "rcdp:lu-bayes:60"] {
            assert_eq!(name.parse::<PolicyKind>().unwrap().to_string(), name);
        }
        assert!("rcdp:nope".parse::<PolicyKind>().is_err());
        assert!("walk".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn deterministic_replay() {
        let e = wall(ObstacleStatus::False);
        for c in all_policies(2.0) {
            assert_eq!(run_policy(&e, &c).unwrap(), run_policy(&e, &c).unwrap());
        }
    }

    #[test]
    fn toy_instance_favors_constrained_planning() {
        let env = Environment::toy();
        let rcdp = PolicyConfig::new(PolicyKind::Rcdp { risk: RiskModel::lu(15.0) }, 2.0);
        let rd = PolicyConfig::new(PolicyKind::GreedyRd, 2.0);
        let a = evaluate_expected::<ChaCha8Rng>(&env, &rcdp, None).unwrap().mean;
        let b = evaluate_expected::<ChaCha8Rng>(&env, &rd, None).unwrap().mean;
        assert!(a < b, "{a} vs {b}");
        let first = run_policy(&env, &rcdp).unwrap().disambiguations[0].0;
        assert_eq!(first, 3);
    }
}
