//! Risk-adjusted lattice: per-edge surrogate cost, disambiguation weight, and the
//! mutable knowledge/elimination state that planners update.

use std::collections::HashMap;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::env::{Environment, Knowledge, Obstacle, ObstacleStatus};
use crate::error::{RcdpError, Result};
use crate::geometry::segment_intersects_disk;
use crate::lattice::{EdgeId, LatticeGraph, VertexId};
use crate::risk::RiskModel;

/// How an obstacle contributes to the edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRule {
    /// Weight is the disambiguation cost (general budget scenario).
    #[default]
    DisambCost,
    /// Every obstacle weighs one unit (count-capped scenario).
    UnitCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleState {
    pub id: u32,
    pub risk: f64,
    pub unit: f64,
    pub knowledge: Knowledge,
    /// Treated as blocking by the planner without having been disambiguated.
    pub avoided: bool,
}

impl ObstacleState {
    fn contributes(&self) -> bool {
        self.knowledge == Knowledge::Ambiguous && !self.avoided
    }

    fn blocks(&self) -> bool {
        self.knowledge == Knowledge::ResolvedTrue || (self.avoided && self.knowledge == Knowledge::Ambiguous)
    }
}

#[derive(Debug, Clone)]
pub struct AdjustedGraph {
    lattice: Arc<LatticeGraph>,
    edge_obstacles: Arc<Vec<SmallVec<[u32; 2]>>>,
    obstacle_edges: Arc<Vec<Vec<EdgeId>>>,
    index: Arc<HashMap<u32, usize>>,
    obstacles: Vec<ObstacleState>,
    cost: Vec<f64>,
    weight: Vec<f64>,
    open: Vec<bool>,
    active: Vec<bool>,
    active_count: usize,
}

/// Obstacle indices whose disks touch each lattice edge, in obstacle order.
pub fn intersect_edges(lattice: &LatticeGraph, obstacles: &[Obstacle]) -> Vec<SmallVec<[u32; 2]>> {
    let mut per_edge = vec![SmallVec::new(); lattice.num_edges()];
    for (k, o) in obstacles.iter().enumerate() {
        let lo = crate::geometry::Point::new(o.center.x - o.radius, o.center.y - o.radius);
        let hi = crate::geometry::Point::new(o.center.x + o.radius, o.center.y + o.radius);
        for e in lattice.edges_near(lo, hi) {
            let edge = lattice.edge(e);
            if segment_intersects_disk(lattice.point(edge.u), lattice.point(edge.v), o.center, o.radius) {
                per_edge[e as usize].push(k as u32);
            }
        }
    }
    per_edge
}

impl AdjustedGraph {
    pub fn initialize(lattice: Arc<LatticeGraph>, env: &Environment, risk: &RiskModel, rule: WeightRule) -> Result<Self> {
        risk.validate()?;
        Self::initialize_with(lattice, env, rule, |o| risk.risk(o, env.target))
    }

    /// Build with an arbitrary per-obstacle penalty.
    pub fn initialize_with(
        lattice: Arc<LatticeGraph>,
        env: &Environment,
        rule: WeightRule,
        mut risk: impl FnMut(&Obstacle) -> Result<f64>,
    ) -> Result<Self> {
        let edge_obstacles = intersect_edges(&lattice, &env.obstacles);
        let mut obstacle_edges = vec![Vec::new(); env.obstacles.len()];
        for (e, list) in edge_obstacles.iter().enumerate() {
            for &k in list {
                obstacle_edges[k as usize].push(e as EdgeId);
            }
        }
        let mut obstacles = Vec::with_capacity(env.obstacles.len());
        let mut index = HashMap::with_capacity(env.obstacles.len());
        for (k, o) in env.obstacles.iter().enumerate() {
            let r = risk(o)?;
            if !r.is_finite() || r < 0.0 {
                return Err(RcdpError::InvalidRiskModel(format!("risk {r} for obstacle {}", o.id)));
            }
            let unit = match rule {
                WeightRule::DisambCost => o.disamb_cost,
                WeightRule::UnitCount => 1.0,
            };
            obstacles.push(ObstacleState { id: o.id, risk: r, unit, knowledge: o.knowledge, avoided: false });
            index.insert(o.id, k);
        }
        let n_edges = lattice.num_edges();
        let n_vertices = lattice.num_vertices();
        let mut g = Self {
            lattice,
            edge_obstacles: Arc::new(edge_obstacles),
            obstacle_edges: Arc::new(obstacle_edges),
            index: Arc::new(index),
            obstacles,
            cost: vec![0.0; n_edges],
            weight: vec![0.0; n_edges],
            open: vec![true; n_edges],
            active: vec![true; n_vertices],
            active_count: n_vertices,
        };
        for e in 0..n_edges {
            g.recompute_edge(e);
        }
        Ok(g)
    }

    fn recompute_edge(&mut self, e: usize) {
        let mut r = 0.0;
        let mut w = 0.0;
        let mut open = true;
        for &k in &self.edge_obstacles[e] {
            let o = &self.obstacles[k as usize];
            if o.blocks() {
                open = false;
            } else if o.contributes() {
                r += o.risk;
                w += o.unit;
            }
        }
        self.cost[e] = self.lattice.edge(e as EdgeId).length + 0.5 * r;
        self.weight[e] = 0.5 * w;
        self.open[e] = open;
    }

    fn slot(&self, id: u32) -> Result<usize> {
        self.index.get(&id).copied().ok_or(RcdpError::UnknownObstacle(id))
    }

    /// Record the revealed status of an ambiguous obstacle and refresh its edges.
    pub fn apply_disambiguation(&mut self, id: u32, status: ObstacleStatus) -> Result<()> {
        let k = self.slot(id)?;
        if self.obstacles[k].knowledge != Knowledge::Ambiguous {
            return Err(RcdpError::DoubleDisambiguation(id));
        }
        self.obstacles[k].knowledge = Knowledge::resolved_from(status);
        self.refresh_obstacle(k);
        Ok(())
    }

    /// Treat an ambiguous obstacle as blocking for planning purposes only.
    pub fn avoid(&mut self, id: u32) -> Result<()> {
        let k = self.slot(id)?;
        self.obstacles[k].avoided = true;
        self.refresh_obstacle(k);
        Ok(())
    }

    fn refresh_obstacle(&mut self, k: usize) {
        let edges = Arc::clone(&self.obstacle_edges);
        for &e in &edges[k] {
            self.recompute_edge(e as usize);
        }
    }

    pub fn lattice(&self) -> &LatticeGraph {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> Arc<LatticeGraph> {
        Arc::clone(&self.lattice)
    }

    pub fn num_vertices(&self) -> usize {
        self.lattice.num_vertices()
    }

    pub fn source(&self) -> VertexId {
        self.lattice.source
    }

    pub fn target(&self) -> VertexId {
        self.lattice.target
    }

    pub fn edge_cost(&self, e: EdgeId) -> f64 {
        self.cost[e as usize]
    }

    pub fn edge_weight(&self, e: EdgeId) -> f64 {
        self.weight[e as usize]
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        self.lattice.edge(e).length
    }

    /// Not blocked by a known or avoided obstacle.
    pub fn edge_open(&self, e: EdgeId) -> bool {
        self.open[e as usize]
    }

    /// Open and both endpoints still active.
    pub fn edge_usable(&self, e: EdgeId) -> bool {
        let edge = self.lattice.edge(e);
        self.open[e as usize] && self.active[edge.u as usize] && self.active[edge.v as usize]
    }

    /// Ids of ambiguous, non-avoided obstacles touching edge `e`, ascending.
    pub fn ambiguous_on_edge(&self, e: EdgeId) -> SmallVec<[u32; 2]> {
        let mut ids: SmallVec<[u32; 2]> = self.edge_obstacles[e as usize]
            .iter()
            .map(|&k| &self.obstacles[k as usize])
            .filter(|o| o.contributes())
            .map(|o| o.id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Ids of every obstacle whose disk touches edge `e`, regardless of knowledge.
    pub fn obstacles_on_edge(&self, e: EdgeId) -> impl Iterator<Item = u32> + '_ {
        self.edge_obstacles[e as usize].iter().map(|&k| self.obstacles[k as usize].id)
    }

    pub fn obstacle_state(&self, id: u32) -> Result<&ObstacleState> {
        Ok(&self.obstacles[self.slot(id)?])
    }

    pub fn obstacle_states(&self) -> &[ObstacleState] {
        &self.obstacles
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.active[v as usize]
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn eliminate(&mut self, v: VertexId) {
        if std::mem::replace(&mut self.active[v as usize], false) {
            self.active_count -= 1;
        }
    }

    pub fn restore_all(&mut self) {
        self.active.iter_mut().for_each(|a| *a = true);
        self.active_count = self.active.len();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Region;
    use crate::geometry::Point;
    use proptest::prelude::*;

    fn env_with(obstacles: Vec<Obstacle>) -> Environment {
        Environment::new(Region::new(0.0, 6.0, 0.0, 6.0).unwrap(), obstacles, Point::new(0.0, 0.0), Point::new(6.0, 6.0))
            .unwrap()
    }

    fn build(env: &Environment, risk: &RiskModel) -> AdjustedGraph {
        let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target).unwrap());
        AdjustedGraph::initialize(lattice, env, risk, WeightRule::DisambCost).unwrap()
    }

    fn ob(id: u32, x: f64, y: f64, r: f64, mark: f64, delta: f64) -> Obstacle {
        Obstacle::new(id, Point::new(x, y), r, ObstacleStatus::False, mark, delta)
    }

    /// Two obstacles both touching the horizontal edge (2,2)-(3,2) and nothing else of note.
    fn pair_env() -> Environment {
        env_with(vec![ob(0, 2.5, 2.2, 0.25, 0.5, 1.0), ob(1, 2.5, 1.8, 0.25, 0.5, 3.0)])
    }

    fn edge(g: &AdjustedGraph, a: (usize, usize), b: (usize, usize)) -> EdgeId {
        let l = g.lattice();
        l.edge_between(l.id(a.0, a.1), l.id(b.0, b.1)).unwrap()
    }

    #[test]
    fn halves_risk_and_weight() {
        // rd risks: 1/0.5 = 2 and 3/0.5 = 6 would give 4; use lu-delta-free fixed risks instead
        let env = pair_env();
        let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target).unwrap());
        let risks = [2.0, 4.0];
        let g = AdjustedGraph::initialize_with(lattice, &env, WeightRule::DisambCost, |o| Ok(risks[o.id as usize])).unwrap();
        let e = edge(&g, (2, 2), (3, 2));
        assert_eq!(g.ambiguous_on_edge(e).as_slice(), &[0, 1]);
        assert_eq!(g.edge_cost(e), 1.0 + 3.0);
        assert_eq!(g.edge_weight(e), 2.0);
    }

    #[test]
    fn free_diagonal_costs_its_length() {
        let g = build(&pair_env(), &RiskModel::rd());
        let e = edge(&g, (0, 0), (1, 1));
        assert_eq!(g.edge_cost(e), std::f64::consts::SQRT_2);
        assert_eq!(g.edge_weight(e), 0.0);
    }

    #[test]
    fn resolved_false_contributes_nothing() {
        let mut env = pair_env();
        env.obstacles.truncate(1);
        env.obstacles[0].knowledge = Knowledge::ResolvedFalse;
        let g = build(&env, &RiskModel::rd());
        let e = edge(&g, (2, 2), (3, 2));
        assert_eq!(g.edge_cost(e), 1.0);
        assert_eq!(g.edge_weight(e), 0.0);
        assert!(g.edge_open(e));
    }

    #[test]
    fn disambiguating_false_leaves_the_other_half() {
        let env = pair_env();
        let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target).unwrap());
        let risks = [2.0, 2.0];
        let mut g =
            AdjustedGraph::initialize_with(lattice, &env, WeightRule::DisambCost, |o| Ok(risks[o.id as usize])).unwrap();
        let e = edge(&g, (2, 2), (3, 2));
        g.apply_disambiguation(1, ObstacleStatus::False).unwrap();
        assert_eq!(g.edge_cost(e) - 1.0, 1.0);
        assert_eq!(g.edge_weight(e), 0.5);
        g.apply_disambiguation(0, ObstacleStatus::False).unwrap();
        assert_eq!(g.edge_cost(e), 1.0);
        assert_eq!(g.edge_weight(e), 0.0);
    }

    #[test]
    fn disambiguating_true_blocks_every_touching_edge() {
        let mut g = build(&pair_env(), &RiskModel::rd());
        g.apply_disambiguation(0, ObstacleStatus::True).unwrap();
        let n_blocked = (0..g.lattice().num_edges() as EdgeId).filter(|&e| !g.edge_open(e)).count();
        let n_touching = (0..g.lattice().num_edges() as EdgeId).filter(|&e| g.obstacles_on_edge(e).any(|id| id == 0)).count();
        assert!(n_touching > 0);
        assert_eq!(n_blocked, n_touching);
    }

    #[test]
    fn double_disambiguation_is_an_error() {
        let mut g = build(&pair_env(), &RiskModel::rd());
        g.apply_disambiguation(0, ObstacleStatus::False).unwrap();
        assert!(matches!(g.apply_disambiguation(0, ObstacleStatus::False), Err(RcdpError::DoubleDisambiguation(0))));
        assert!(matches!(g.apply_disambiguation(9, ObstacleStatus::False), Err(RcdpError::UnknownObstacle(9))));
    }

    #[test]
    fn avoided_obstacle_blocks_but_stays_ambiguous() {
        let mut g = build(&pair_env(), &RiskModel::rd());
        g.avoid(1).unwrap();
        let e = edge(&g, (2, 2), (3, 2));
        assert!(!g.edge_open(e));
        assert_eq!(g.obstacle_state(1).unwrap().knowledge, Knowledge::Ambiguous);
    }

    #[test]
    fn elimination_deactivates_incident_edges() {
        let mut g = build(&pair_env(), &RiskModel::rd());
        let e = edge(&g, (2, 2), (3, 2));
        g.eliminate(g.lattice().id(3, 2));
        assert!(!g.edge_usable(e));
        assert_eq!(g.active_count(), g.num_vertices() - 1);
    }

    #[test]
    fn unit_rule_counts_obstacles() {
        let env = pair_env();
        let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target).unwrap());
        let g = AdjustedGraph::initialize(lattice, &env, &RiskModel::rd(), WeightRule::UnitCount).unwrap();
        assert_eq!(g.edge_weight(edge(&g, (2, 2), (3, 2))), 1.0);
    }

    fn arb_obstacles() -> impl Strategy<Value = Vec<(f64, f64, f64, f64, f64)>> {
        prop::collection::vec((0.0f64..6.0, 0.0f64..6.0, 0.2f64..2.0, 0.0f64..0.95, 0.5f64..5.0), 0..6)
    }

    proptest! {
        #[test]
        fn aggregation_matches_brute_force_scan(raw in arb_obstacles(), resolve in prop::collection::vec(0u8..3, 6)) {
            let mut obstacles: Vec<Obstacle> = raw.iter().enumerate()
                .map(|(k, &(x, y, r, m, d))| ob(k as u32, x, y, r, m, d)).collect();
            for (o, &k) in obstacles.iter_mut().zip(&resolve) {
                match k {
                    1 => { o.status = ObstacleStatus::False; o.knowledge = Knowledge::ResolvedFalse; }
                    2 => { o.status = ObstacleStatus::True; o.knowledge = Knowledge::ResolvedTrue; }
                    _ => {}
                }
            }
            let env = env_with(obstacles);
            let risk = RiskModel::rd();
            let g = build(&env, &risk);
            let l = g.lattice();
            for (e, edge) in l.edges().iter().enumerate() {
                let (a, b) = (l.point(edge.u), l.point(edge.v));
                let mut r = 0.0; let mut w = 0.0; let mut open = true;
                for o in &env.obstacles {
                    if !segment_intersects_disk(a, b, o.center, o.radius) { continue; }
                    match o.knowledge {
                        Knowledge::Ambiguous => { r += risk.risk(o, env.target).unwrap(); w += o.disamb_cost; }
                        Knowledge::ResolvedTrue => open = false,
                        Knowledge::ResolvedFalse => {}
                    }
                }
                let e = e as EdgeId;
                prop_assert_eq!(g.edge_open(e), open);
                prop_assert!((g.edge_cost(e) - (edge.length + 0.5 * r)).abs() < 1e-9);
                prop_assert!((g.edge_weight(e) - 0.5 * w).abs() < 1e-9);
                // reversed segment gives the same intersection set
                let rev = env.obstacles.iter().filter(|o| segment_intersects_disk(b, a, o.center, o.radius)).count();
                prop_assert_eq!(rev, g.obstacles_on_edge(e).count());
            }
        }

        #[test]
        fn resolving_never_increases_edge_values(raw in arb_obstacles(), pick in 0usize..6, blocking: bool) {
            prop_assume!(!raw.is_empty());
            let obstacles: Vec<Obstacle> = raw.iter().enumerate()
                .map(|(k, &(x, y, r, m, d))| ob(k as u32, x, y, r, m, d)).collect();
            let env = env_with(obstacles);
            let before = build(&env, &RiskModel::lu(15.0));
            let mut after = before.clone();
            let id = (pick % raw.len()) as u32;
            let status = if blocking { ObstacleStatus::True } else { ObstacleStatus::False };
            after.apply_disambiguation(id, status).unwrap();
            for e in 0..before.lattice().num_edges() as EdgeId {
                if blocking {
                    prop_assert!(before.edge_open(e) || !after.edge_open(e));
                    if after.edge_open(e) {
                        prop_assert_eq!(after.edge_cost(e), before.edge_cost(e));
                    }
                } else {
                    prop_assert_eq!(after.edge_open(e), before.edge_open(e));
                    prop_assert!(after.edge_cost(e) <= before.edge_cost(e));
                    prop_assert!(after.edge_weight(e) <= before.edge_weight(e));
                }
            }
        }
    }
}
