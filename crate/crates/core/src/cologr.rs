//! Weight-constrained shortest path by Lagrangian relaxation with two-phase vertex
//! elimination, plus the single-phase elimination baseline.
//!
//! Phase one sweeps every vertex with the min-cost and min-weight paths through it,
//! dropping vertices that cannot lie on a feasible path or cannot beat the incumbent.
//! Phase two walks the multiplier along the bracket intersection and drops vertices
//! whose penalized bound exceeds the incumbent.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{RcdpError, Result};
use crate::graph::AdjustedGraph;
use crate::lattice::VertexId;
use crate::spp::{dijkstra, Key, simplify_walk, through_vertex_path, DistanceField, PathSolution, Valuation, WEIGHT_TOL};

/// Absolute tolerance on penalized-cost comparisons.
pub const TIE_TOL: f64 = 1e-9;
/// Relative tolerance for declaring the duality gap closed.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    OptimalUnconstrained,
    OptimalDualCondition,
    OptimalGapClosed,
    BestFeasible,
    Infeasible,
}

impl SolveStatus {
    pub fn is_feasible(self) -> bool {
        self != SolveStatus::Infeasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cologr,
    Sne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub lambda: f64,
    pub path_cost: f64,
    pub path_weight: f64,
    pub upper: f64,
    pub lower: f64,
    pub eliminated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub status: SolveStatus,
    pub solution: PathSolution,
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    pub duality_gap: f64,
    pub iterations: usize,
    pub graph_size_before: usize,
    pub graph_size_after: usize,
    pub cogr_eliminations: usize,
    pub logr_eliminations: usize,
    pub eliminated: Vec<VertexId>,
    /// A multiplier value recurred and the search was cut short.
    pub cycle_detected: bool,
    /// New multipliers that fell outside the current bracket.
    pub bracket_violations: usize,
    pub trace: Vec<IterationRecord>,
}

/// Multiplier at which the penalized costs of the two bracket paths coincide.
pub fn lambda_update(c_minus: f64, d_minus: f64, c_plus: f64, d_plus: f64) -> f64 {
    (c_minus - c_plus) / (d_plus - d_minus)
}

/// Bracketing pair for the multiplier search: `minus` is light enough, `plus` too heavy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub c_minus: f64,
    pub d_minus: f64,
    pub lambda_minus: f64,
    pub c_plus: f64,
    pub d_plus: f64,
    pub lambda_plus: f64,
}

impl Bracket {
    pub fn next_lambda(&self) -> f64 {
        lambda_update(self.c_minus, self.d_minus, self.c_plus, self.d_plus)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_plus - TIE_TOL && lambda <= self.lambda_minus + TIE_TOL
    }

    /// Penalized cost of the bracket line at `lambda`.
    pub fn line(&self, lambda: f64) -> f64 {
        self.c_plus + lambda * self.d_plus
    }

    pub fn update(&mut self, cost: f64, weight: f64, lambda: f64, delta_max: f64) {
        if weight < delta_max {
            (self.c_minus, self.d_minus, self.lambda_minus) = (cost, weight, lambda);
        } else {
            (self.c_plus, self.d_plus, self.lambda_plus) = (cost, weight, lambda);
        }
    }
}

pub fn cologr_solve(graph: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64) -> SolveReport {
    Solver::new(graph, s, t, delta_max, Method::Cologr).run()
}

pub fn sne_solve(graph: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64) -> SolveReport {
    Solver::new(graph, s, t, delta_max, Method::Sne).run()
}

pub fn solve(graph: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64, method: Method) -> SolveReport {
    Solver::new(graph, s, t, delta_max, method).run()
}

/// Phase-one reduction alone. Returns the reduced graph and, when the phase settles
/// the instance, the final report.
pub fn cogr(graph: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64) -> (AdjustedGraph, Option<SolveReport>) {
    let mut solver = Solver::new(graph, s, t, delta_max, Method::Cologr);
    match solver.setup() {
        Err(done) => (solver.g.clone(), Some(done)),
        Ok(()) => match solver.cogr() {
            Err(done) => (solver.g.clone(), Some(done)),
            Ok(_) => (solver.g, None),
        },
    }
}

struct Solver {
    g: AdjustedGraph,
    s: VertexId,
    t: VertexId,
    delta_max: f64,
    method: Method,
    incumbent: PathSolution,
    lower: f64,
    iterations: usize,
    cogr_eliminations: usize,
    logr_eliminations: usize,
    eliminated: Vec<VertexId>,
    cycle_detected: bool,
    bracket_violations: usize,
    trace: Vec<IterationRecord>,
    size_before: usize,
}

type Done = SolveReport;

impl Solver {
    fn new(graph: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64, method: Method) -> Self {
        Self {
            size_before: graph.active_count(),
            g: graph.clone(),
            s,
            t,
            delta_max,
            method,
            incumbent: PathSolution::none(),
            lower: f64::NEG_INFINITY,
            iterations: 0,
            cogr_eliminations: 0,
            logr_eliminations: 0,
            eliminated: Vec::new(),
            cycle_detected: false,
            bracket_violations: 0,
            trace: Vec::new(),
        }
    }

    fn run(mut self) -> SolveReport {
        if let Err(done) = self.setup() {
            return done;
        }
        let p_plus = match self.method {
            Method::Cologr => match self.cogr() {
                Ok(p) => p,
                Err(done) => return done,
            },
            Method::Sne => shortest(&self.g, self.s, self.t, 0.0),
        };
        self.logr(p_plus)
    }

    fn feasible(&self, weight: f64) -> bool {
        weight <= self.delta_max + WEIGHT_TOL
    }

    fn upper(&self) -> f64 {
        self.incumbent.cost
    }

    fn gap_closed(&self) -> bool {
        self.upper() - self.lower <= GAP_TOL * self.lower.abs().max(f64::MIN_POSITIVE)
    }

    fn finish(&self, status: SolveStatus, solution: PathSolution) -> SolveReport {
        let (upper, lower, gap) = if status.is_feasible() {
            let upper = solution.cost;
            let lower = self.lower.min(upper);
            (Some(upper), Some(lower), (upper - lower) / lower)
        } else {
            (None, None, 0.0)
        };
        SolveReport {
            method: self.method,
            status,
            solution,
            upper_bound: upper,
            lower_bound: lower,
            duality_gap: gap,
            iterations: self.iterations,
            graph_size_before: self.size_before,
            graph_size_after: self.g.active_count(),
            cogr_eliminations: self.cogr_eliminations,
            logr_eliminations: self.logr_eliminations,
            eliminated: self.eliminated.clone(),
            cycle_detected: self.cycle_detected,
            bracket_violations: self.bracket_violations,
            trace: self.trace.clone(),
        }
    }

    fn finish_incumbent(&self, status: SolveStatus) -> SolveReport {
        self.finish(status, self.incumbent.clone())
    }

    fn eliminate(&mut self, del: &[VertexId]) {
        for &v in del {
            self.g.eliminate(v);
        }
        self.eliminated.extend_from_slice(del);
    }

    /// Unconstrained and minimum-weight probes shared by both methods.
    fn setup(&mut self) -> Result<(), Done> {
        if !self.g.is_active(self.s) || !self.g.is_active(self.t) {
            return Err(self.finish(SolveStatus::Infeasible, PathSolution::none()));
        }
        let p0 = shortest(&self.g, self.s, self.t, 0.0);
        if !p0.exists {
            return Err(self.finish(SolveStatus::Infeasible, PathSolution::none()));
        }
        self.lower = p0.cost;
        if self.feasible(p0.weight) {
            return Err(self.finish(SolveStatus::OptimalUnconstrained, p0));
        }
        let p_inf = dijkstra(&self.g, self.s, Valuation::Lexicographic).path_to(&self.g, self.t);
        if !self.feasible(p_inf.weight) {
            return Err(self.finish(SolveStatus::Infeasible, PathSolution::none()));
        }
        self.incumbent = p_inf;
        Ok(())
    }

    /// Offer a through-vertex walk as an incumbent after removing its loops.
    fn offer(&mut self, forward: &DistanceField, backward: &DistanceField, v: VertexId) {
        let walk = through_vertex_path(&self.g, forward, backward, v);
        let path = simplify_walk(&self.g, &walk);
        if self.feasible(path.weight) && path.cost < self.upper() {
            self.incumbent = path;
        }
    }

    /// Phase one. Returns the min-cost path of the reduced graph when bounds stay open.
    fn cogr(&mut self) -> Result<PathSolution, Done> {
        let (s, t) = (self.s, self.t);
        let mut f0 = dijkstra(&self.g, s, Valuation::Composite(0.0));
        let mut fi = dijkstra(&self.g, s, Valuation::Lexicographic);
        loop {
            let b0 = dijkstra(&self.g, t, Valuation::Composite(0.0));
            let bi = dijkstra(&self.g, t, Valuation::Lexicographic);
            let mut del = Vec::new();
            for v in 0..self.g.num_vertices() as VertexId {
                if !self.g.is_active(v) || v == s || v == t {
                    continue;
                }
                let vi = v as usize;
                if !fi.reached(v) || !bi.reached(v) {
                    del.push(v);
                    continue;
                }
                if !self.feasible(fi.weight[vi] + bi.weight[vi]) {
                    del.push(v);
                    continue;
                }
                let (c0, w0) = (f0.cost[vi] + b0.cost[vi], f0.weight[vi] + b0.weight[vi]);
                let c_inf = fi.cost[vi] + bi.cost[vi];
                if c0 < self.upper() && self.feasible(w0) {
                    self.offer(&f0, &b0, v);
                } else if c_inf < self.upper() {
                    self.offer(&fi, &bi, v);
                }
                if c0 > self.upper() + TIE_TOL {
                    del.push(v);
                }
            }
            if del.is_empty() {
                break;
            }
            self.cogr_eliminations += del.len();
            self.eliminate(&del);
            f0 = dijkstra(&self.g, s, Valuation::Composite(0.0));
            fi = dijkstra(&self.g, s, Valuation::Lexicographic);
        }
        let p0 = f0.path_to(&self.g, t);
        self.lower = self.lower.max(p0.cost);
        if self.feasible(p0.weight) {
            if p0.cost <= self.upper() {
                self.incumbent = p0;
            }
            return Err(self.finish_incumbent(SolveStatus::OptimalGapClosed));
        }
        if self.gap_closed() {
            return Err(self.finish_incumbent(SolveStatus::OptimalGapClosed));
        }
        Ok(p0)
    }

    /// One penalized sweep at `lambda`: incumbent updates and elimination candidates.
    /// Returns the global penalized minimum and the vertices to drop.
    fn penalized_sweep(&mut self, forward: &DistanceField, backward: &DistanceField, lambda: f64) -> Vec<VertexId> {
        let (s, t) = (self.s, self.t);
        let mut del = Vec::new();
        for v in 0..self.g.num_vertices() as VertexId {
            if !self.g.is_active(v) {
                continue;
            }
            let vi = v as usize;
            if !forward.reached(v) || !backward.reached(v) {
                if v != s && v != t {
                    del.push(v);
                }
                continue;
            }
            let (c, w) = (forward.cost[vi] + backward.cost[vi], forward.weight[vi] + backward.weight[vi]);
            if c < self.upper() && self.feasible(w) {
                self.offer(forward, backward, v);
            }
            if v == s || v == t {
                continue;
            }
            let phi = forward.key[vi].0 + backward.key[vi].0 - lambda * self.delta_max;
            let drop = match self.method {
                Method::Cologr => phi > self.upper() + TIE_TOL,
                Method::Sne => phi >= self.upper() - TIE_TOL,
            };
            if drop {
                del.push(v);
            }
        }
        del
    }

    /// Phase two: multiplier search between the reduced graph's min-cost path and the
    /// incumbent. A stall at the dual optimum with the gap still open is settled by an
    /// exact bounded label search on the reduced graph.
    fn logr(&mut self, p_plus: PathSolution) -> SolveReport {
        let cap = 10 * self.g.lattice().num_edges();
        let lambda = match self.lagrange_round(&p_plus, cap) {
            Ok(done) => return done,
            Err(lambda) => lambda,
        };
        if self.gap_closed() {
            return self.finish_incumbent(SolveStatus::OptimalDualCondition);
        }
        match close_gap(&self.g, self.s, self.t, self.delta_max, lambda, self.upper()) {
            Some(best) => {
                if best.exists && best.cost < self.upper() {
                    self.incumbent = best;
                }
                self.lower = self.upper();
                self.finish_incumbent(SolveStatus::OptimalGapClosed)
            }
            None => self.finish_incumbent(SolveStatus::OptimalDualCondition),
        }
    }

    /// One multiplier search. `Err(lambda)` means it stalled at `lambda` on the bracket line.
    fn lagrange_round(&mut self, p_plus: &PathSolution, cap: usize) -> Result<SolveReport, f64> {
        let (s, t) = (self.s, self.t);
        let mut bracket = Bracket {
            c_minus: self.upper(),
            d_minus: self.incumbent.weight,
            lambda_minus: f64::INFINITY,
            c_plus: p_plus.cost,
            d_plus: p_plus.weight,
            lambda_plus: 0.0,
        };
        let mut seen = HashSet::new();
        loop {
            if self.gap_closed() {
                return Ok(self.finish_incumbent(SolveStatus::OptimalGapClosed));
            }
            if self.iterations >= cap {
                return Ok(self.finish_incumbent(SolveStatus::BestFeasible));
            }
            self.iterations += 1;
            let lambda = bracket.next_lambda();
            if !bracket.contains(lambda) {
                self.bracket_violations += 1;
            }
            if !seen.insert(lambda.to_bits()) {
                self.cycle_detected = true;
                return Ok(self.finish_incumbent(SolveStatus::BestFeasible));
            }
            let fwd = dijkstra(&self.g, s, Valuation::Composite(lambda));
            let bwd = dijkstra(&self.g, t, Valuation::Composite(lambda));
            if !fwd.reached(t) {
                return Ok(self.finish_incumbent(SolveStatus::BestFeasible));
            }
            let p = fwd.path_to(&self.g, t);
            let penalized = fwd.key[t as usize].0;

            if self.method == Method::Cologr && (p.weight - self.delta_max).abs() <= WEIGHT_TOL {
                self.lower = self.lower.max(p.cost);
                if p.cost < self.upper() {
                    self.incumbent = p.clone();
                }
                self.push_trace(lambda, &p, 0);
                return Ok(self.finish_incumbent(SolveStatus::OptimalDualCondition));
            }

            let del = self.penalized_sweep(&fwd, &bwd, lambda);
            self.lower = self.lower.max(penalized - lambda * self.delta_max);
            self.logr_eliminations += del.len();
            self.eliminate(&del);
            self.push_trace(lambda, &p, del.len());
            if self.gap_closed() {
                return Ok(self.finish_incumbent(SolveStatus::OptimalGapClosed));
            }

            let on_line = (penalized - bracket.line(lambda)).abs() <= TIE_TOL;
            match self.method {
                Method::Cologr if on_line => return Err(lambda),
                Method::Sne => {
                    let repeats = (p.cost == bracket.c_plus && p.weight == bracket.d_plus)
                        || (p.cost == bracket.c_minus && p.weight == bracket.d_minus);
                    if repeats {
                        return Ok(self.finish_incumbent(SolveStatus::BestFeasible));
                    }
                }
                _ => {}
            }
            bracket.update(p.cost, p.weight, lambda, self.delta_max);
        }
    }

    fn push_trace(&mut self, lambda: f64, p: &PathSolution, eliminated: usize) {
        self.trace.push(IterationRecord {
            lambda,
            path_cost: p.cost,
            path_weight: p.weight,
            upper: self.upper(),
            lower: self.lower,
            eliminated,
        });
    }
}

/// Label budget for the gap-closing search; past it the stall is reported as is.
const CLOSE_LABEL_LIMIT: usize = 4_000_000;

/// Exact constrained search over the active vertices, pruned by the penalized bound at
/// `lambda` against `upper`. Labels expand in order of cost plus exact remaining cost, so
/// the first label to reach `t` is optimal. Returns `PathSolution::none()` when nothing
/// beats `upper`, and `None` when the label budget runs out.
fn close_gap(g: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64, lambda: f64, upper: f64) -> Option<PathSolution> {
    let h0 = dijkstra(g, t, Valuation::Composite(0.0));
    let hw = dijkstra(g, t, Valuation::Lexicographic);
    let hl = dijkstra(g, t, Valuation::Composite(lambda));
    let bound = upper + TIE_TOL;
    let n = g.num_vertices();
    let mut best_weight = vec![f64::INFINITY; n];
    // (cost, weight, vertex, parent)
    let mut labels: Vec<(f64, f64, VertexId, u32)> = vec![(0.0, 0.0, s, u32::MAX)];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Key(h0.key[s as usize].0, 0.0), 0u32)));
    while let Some(Reverse((_, id))) = heap.pop() {
        let (cost, weight, u, _) = labels[id as usize];
        if weight >= best_weight[u as usize] {
            continue;
        }
        best_weight[u as usize] = weight;
        if u == t {
            let mut vs = Vec::new();
            let mut cur = id;
            while cur != u32::MAX {
                vs.push(labels[cur as usize].2);
                cur = labels[cur as usize].3;
            }
            vs.reverse();
            return Some(PathSolution::from_vertices(g, vs));
        }
        for &(v, e) in g.lattice().neighbors(u) {
            if !g.edge_usable(e) {
                continue;
            }
            let vi = v as usize;
            let w = weight + g.edge_weight(e);
            let c = cost + g.edge_cost(e);
            if w >= best_weight[vi]
                || !hl.reached(v)
                || w + hw.key[vi].0 > delta_max + WEIGHT_TOL
                || c + h0.key[vi].0 >= upper - TIE_TOL
                || c + lambda * w + hl.key[vi].0 - lambda * delta_max > bound
            {
                continue;
            }
            if labels.len() >= CLOSE_LABEL_LIMIT {
                return None;
            }
            labels.push((c, w, v, id));
            heap.push(Reverse((Key(c + h0.key[vi].0, w), (labels.len() - 1) as u32)));
        }
    }
    Some(PathSolution::none())
}

fn shortest(g: &AdjustedGraph, s: VertexId, t: VertexId, lambda: f64) -> PathSolution {
    dijkstra(g, s, Valuation::Composite(lambda)).path_to(g, t)
}

/// Cost bounds from an s-t vertex cut: the cheapest min-cost walk through a cut vertex
/// and the cheapest feasible min-weight walk through one.
pub fn cut_bounds(g: &AdjustedGraph, s: VertexId, t: VertexId, delta_max: f64, cut: &[VertexId]) -> Result<(f64, f64)> {
    let mut blocked = vec![false; g.num_vertices()];
    for &v in cut {
        blocked[v as usize] = true;
    }
    if !blocked[s as usize] && !blocked[t as usize] {
        let mut seen = blocked.clone();
        let mut stack = vec![s];
        seen[s as usize] = true;
        while let Some(u) = stack.pop() {
            if u == t {
                return Err(RcdpError::NotACut);
            }
            for &(v, e) in g.lattice().neighbors(u) {
                if !seen[v as usize] && g.edge_usable(e) {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
    }
    let f0 = dijkstra(g, s, Valuation::Composite(0.0));
    let b0 = dijkstra(g, t, Valuation::Composite(0.0));
    let fi = dijkstra(g, s, Valuation::Lexicographic);
    let bi = dijkstra(g, t, Valuation::Lexicographic);
    let (mut lower, mut upper) = (f64::INFINITY, f64::INFINITY);
    for &v in cut {
        let vi = v as usize;
        if !f0.reached(v) || !b0.reached(v) {
            continue;
        }
        lower = lower.min(f0.cost[vi] + b0.cost[vi]);
        if fi.weight[vi] + bi.weight[vi] <= delta_max + WEIGHT_TOL {
            upper = upper.min(fi.cost[vi] + bi.cost[vi]);
        }
    }
    Ok((lower, upper))
}
