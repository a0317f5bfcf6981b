//! Shortest-path primitives over an adjusted graph.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{RcdpError, Result};
use crate::graph::AdjustedGraph;
use crate::lattice::{EdgeId, VertexId, NO_VERTEX};

/// Feasibility slack on accumulated weights.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Vertex limit for the label-setting oracle.
pub const ORACLE_VERTEX_LIMIT: usize = 2000;

/// Edge valuation used by a Dijkstra run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Valuation {
    /// `cost + lambda * weight`.
    Composite(f64),
    /// Weight first, cost as tie-break.
    Lexicographic,
}

impl Valuation {
    fn edge_key(self, g: &AdjustedGraph, e: EdgeId) -> Key {
        match self {
            Valuation::Composite(lambda) => Key(g.edge_cost(e) + lambda * g.edge_weight(e), 0.0),
            Valuation::Lexicographic => Key(g.edge_weight(e), g.edge_cost(e)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key(pub f64, pub f64);

impl Key {
    const INF: Key = Key(f64::INFINITY, f64::INFINITY);
    const ZERO: Key = Key(0.0, 0.0);

    fn add(self, o: Key) -> Key {
        Key(self.0 + o.0, self.1 + o.1)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
}

/// Single-source distances and shortest-path tree under one valuation.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub root: VertexId,
    pub valuation: Valuation,
    pub key: Vec<Key>,
    pub cost: Vec<f64>,
    pub weight: Vec<f64>,
    pub length: Vec<f64>,
    pub pred: Vec<VertexId>,
    pub pred_edge: Vec<EdgeId>,
}

impl DistanceField {
    pub fn reached(&self, v: VertexId) -> bool {
        self.key[v as usize].is_finite()
    }

    /// Tree path from the root to `v`, root first.
    pub fn vertices_to(&self, v: VertexId) -> Option<Vec<VertexId>> {
        if !self.reached(v) {
            return None;
        }
        let mut out = vec![v];
        let mut cur = v;
        while cur != self.root {
            cur = self.pred[cur as usize];
            out.push(cur);
        }
        out.reverse();
        Some(out)
    }

    pub fn path_to(&self, g: &AdjustedGraph, v: VertexId) -> PathSolution {
        match self.vertices_to(v) {
            Some(vs) => PathSolution::from_vertices(g, vs),
            None => PathSolution::none(),
        }
    }
}

/// Dijkstra from `root` over usable edges. Ties on key resolve toward the smaller
/// predecessor id; the heap pops equal keys in ascending vertex id.
pub fn dijkstra(g: &AdjustedGraph, root: VertexId, valuation: Valuation) -> DistanceField {
    let n = g.num_vertices();
    let mut f = DistanceField {
        root,
        valuation,
        key: vec![Key::INF; n],
        cost: vec![f64::INFINITY; n],
        weight: vec![f64::INFINITY; n],
        length: vec![f64::INFINITY; n],
        pred: vec![NO_VERTEX; n],
        pred_edge: vec![EdgeId::MAX; n],
    };
    if !g.is_active(root) {
        return f;
    }
    let lattice = g.lattice();
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    f.key[root as usize] = Key::ZERO;
    f.cost[root as usize] = 0.0;
    f.weight[root as usize] = 0.0;
    f.length[root as usize] = 0.0;
    heap.push(Reverse((Key::ZERO, root)));
    while let Some(Reverse((k, u))) = heap.pop() {
        let ui = u as usize;
        if settled[ui] || k != f.key[ui] {
            continue;
        }
        settled[ui] = true;
        for &(v, e) in lattice.neighbors(u) {
            let vi = v as usize;
            if settled[vi] || !g.edge_usable(e) {
                continue;
            }
            let nk = k.add(valuation.edge_key(g, e));
            let better = match nk.cmp(&f.key[vi]) {
                Ordering::Less => true,
                Ordering::Equal => u < f.pred[vi],
                Ordering::Greater => false,
            };
            if better {
                let improved = nk < f.key[vi];
                f.key[vi] = nk;
                f.cost[vi] = f.cost[ui] + g.edge_cost(e);
                f.weight[vi] = f.weight[ui] + g.edge_weight(e);
                f.length[vi] = f.length[ui] + g.edge_length(e);
                f.pred[vi] = u;
                f.pred_edge[vi] = e;
                if improved {
                    heap.push(Reverse((nk, v)));
                }
            }
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub vertices: Vec<VertexId>,
    pub cost: f64,
    pub weight: f64,
    pub length: f64,
    pub exists: bool,
}

impl PathSolution {
    pub fn none() -> Self {
        Self { vertices: Vec::new(), cost: f64::INFINITY, weight: f64::INFINITY, length: f64::INFINITY, exists: false }
    }

    /// Sums accumulated left to right over consecutive vertex pairs. Panics if two
    /// consecutive vertices are not lattice neighbors.
    pub fn from_vertices(g: &AdjustedGraph, vertices: Vec<VertexId>) -> Self {
        let (mut cost, mut weight, mut length) = (0.0, 0.0, 0.0);
        for pair in vertices.windows(2) {
            let e = g.lattice().edge_between(pair[0], pair[1]).expect("consecutive path vertices must be adjacent");
            cost += g.edge_cost(e);
            weight += g.edge_weight(e);
            length += g.edge_length(e);
        }
        Self { exists: !vertices.is_empty(), vertices, cost, weight, length }
    }

    pub fn edges(&self, g: &AdjustedGraph) -> Vec<EdgeId> {
        self.vertices
            .windows(2)
            .map(|p| g.lattice().edge_between(p[0], p[1]).expect("adjacent"))
            .collect()
    }

    pub fn is_feasible(&self, delta_max: f64) -> bool {
        self.exists && self.weight <= delta_max + WEIGHT_TOL
    }

    /// Every hop is an open edge between active vertices.
    pub fn is_usable_in(&self, g: &AdjustedGraph) -> bool {
        self.exists
            && self.vertices.iter().all(|&v| g.is_active(v))
            && self.vertices.windows(2).all(|p| g.lattice().edge_between(p[0], p[1]).is_some_and(|e| g.edge_usable(e)))
    }
}

pub fn shortest_path(g: &AdjustedGraph, s: VertexId, t: VertexId, valuation: Valuation) -> PathSolution {
    dijkstra(g, s, valuation).path_to(g, t)
}

/// Minimum weight, then minimum cost among minimum-weight paths.
pub fn min_weight_path(g: &AdjustedGraph, s: VertexId, t: VertexId) -> PathSolution {
    shortest_path(g, s, t, Valuation::Lexicographic)
}

/// Concatenation of the forward tree path to `v` and the backward tree path from `v`.
/// The result is a walk and may revisit vertices.
pub fn through_vertex_path(g: &AdjustedGraph, forward: &DistanceField, backward: &DistanceField, v: VertexId) -> PathSolution {
    match (forward.vertices_to(v), backward.vertices_to(v)) {
        (Some(mut head), Some(mut tail)) => {
            tail.reverse();
            head.extend_from_slice(&tail[1..]);
            PathSolution::from_vertices(g, head)
        }
        _ => PathSolution::none(),
    }
}

/// Remove cycles from a walk, keeping the first visit of each repeated vertex.
pub fn simplify_walk(g: &AdjustedGraph, walk: &PathSolution) -> PathSolution {
    if !walk.exists {
        return walk.clone();
    }
    let mut pos = std::collections::HashMap::with_capacity(walk.vertices.len());
    let mut out: Vec<VertexId> = Vec::with_capacity(walk.vertices.len());
    for &v in &walk.vertices {
        if let Some(&i) = pos.get(&v) {
            for w in out.drain(i + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    if out.len() == walk.vertices.len() {
        return walk.clone();
    }
    PathSolution::from_vertices(g, out)
}

#[derive(Debug, Clone, Copy)]
struct Label {
    cost: f64,
    weight: f64,
    vertex: VertexId,
    parent: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct LabelKey(Key, VertexId, u32);

/// Exact weight-constrained shortest path by label setting with Pareto pruning.
/// Labels are expanded in order of cost plus the exact remaining cost to `t`; a label
/// survives at a vertex only if its weight is strictly below every label already
/// settled there.
pub fn wcspp_oracle(g: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64) -> Result<PathSolution> {
    if g.active_count() > ORACLE_VERTEX_LIMIT {
        return Err(RcdpError::OracleScaleLimit { active: g.active_count(), limit: ORACLE_VERTEX_LIMIT });
    }
    let to_t_cost = dijkstra(g, t, Valuation::Composite(0.0));
    let to_t_weight = dijkstra(g, t, Valuation::Lexicographic);
    if !to_t_cost.reached(s) || to_t_weight.key[s as usize].0 > delta_max + WEIGHT_TOL {
        return Ok(PathSolution::none());
    }
    let n = g.num_vertices();
    let mut best_weight = vec![f64::INFINITY; n];
    let mut labels = vec![Label { cost: 0.0, weight: 0.0, vertex: s, parent: u32::MAX }];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(LabelKey(Key(to_t_cost.key[s as usize].0, 0.0), s, 0)));
    while let Some(Reverse(LabelKey(_, u, id))) = heap.pop() {
        let label = labels[id as usize];
        if label.weight >= best_weight[u as usize] {
            continue;
        }
        best_weight[u as usize] = label.weight;
        if u == t {
            let mut vs = Vec::new();
            let mut cur = id;
            while cur != u32::MAX {
                vs.push(labels[cur as usize].vertex);
                cur = labels[cur as usize].parent;
            }
            vs.reverse();
            return Ok(PathSolution::from_vertices(g, vs));
        }
        for &(v, e) in g.lattice().neighbors(u) {
            if !g.edge_usable(e) {
                continue;
            }
            let w = label.weight + g.edge_weight(e);
            let vi = v as usize;
            if w >= best_weight[vi] || w + to_t_weight.key[vi].0 > delta_max + WEIGHT_TOL {
                continue;
            }
            let c = label.cost + g.edge_cost(e);
            labels.push(Label { cost: c, weight: w, vertex: v, parent: id });
            let nid = (labels.len() - 1) as u32;
            heap.push(Reverse(LabelKey(Key(c + to_t_cost.key[vi].0, w), v, nid)));
        }
    }
    Ok(PathSolution::none())
}
