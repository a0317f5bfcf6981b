//! Unit-spacing 8-adjacency lattice over a rectangular region.

use crate::env::Region;
use crate::error::{RcdpError, Result};
use crate::geometry::Point;

pub type VertexId = u32;
pub type EdgeId = u32;

pub const NO_VERTEX: VertexId = VertexId::MAX;

/// Forward neighbor offsets owned by each vertex. Together they cover every
/// undirected 8-adjacency pair exactly once.
const FORWARD: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
}

impl Edge {
    pub fn other(&self, w: VertexId) -> VertexId {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatticeGraph {
    pub width: usize,
    pub height: usize,
    x0: i64,
    y0: i64,
    pub source: VertexId,
    pub target: VertexId,
    edges: Vec<Edge>,
    adj_start: Vec<u32>,
    adj: Vec<(VertexId, EdgeId)>,
}

/// Expected undirected edge count of a `w` x `h` 8-adjacency grid.
pub fn grid_edge_count(w: usize, h: usize) -> usize {
    if w == 0 || h == 0 {
        return 0;
    }
    h * (w - 1) + w * (h - 1) + 2 * (w - 1) * (h - 1)
}

impl LatticeGraph {
    pub fn build(region: &Region, s: Point, t: Point) -> Result<Self> {
        region.validate()?;
        for p in [s, t] {
            if !region.contains(p) {
                return Err(RcdpError::OutsideRegion { x: p.x, y: p.y });
            }
        }
        let x0 = region.x_min.ceil() as i64;
        let y0 = region.y_min.ceil() as i64;
        let width = (region.x_max.floor() as i64 - x0 + 1) as usize;
        let height = (region.y_max.floor() as i64 - y0 + 1) as usize;

        let mut g = Self {
            width,
            height,
            x0,
            y0,
            source: 0,
            target: 0,
            edges: Vec::with_capacity(grid_edge_count(width, height)),
            adj_start: Vec::new(),
            adj: Vec::new(),
        };
        g.source = g.snap(s);
        g.target = g.snap(t);
        if g.source == g.target {
            return Err(RcdpError::DegenerateEndpoints);
        }

        let mut degree = vec![0u32; width * height];
        for j in 0..height as i64 {
            for i in 0..width as i64 {
                let u = g.id(i as usize, j as usize);
                for (di, dj) in FORWARD {
                    let (ni, nj) = (i + di, j + dj);
                    if ni < 0 || ni >= width as i64 || nj >= height as i64 {
                        continue;
                    }
                    let v = g.id(ni as usize, nj as usize);
                    let length = if di != 0 && dj != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                    g.edges.push(Edge { u, v, length });
                    degree[u as usize] += 1;
                    degree[v as usize] += 1;
                }
            }
        }

        g.adj_start = Vec::with_capacity(width * height + 1);
        let mut acc = 0u32;
        for d in &degree {
            g.adj_start.push(acc);
            acc += d;
        }
        g.adj_start.push(acc);
        let mut fill = g.adj_start.clone();
        g.adj = vec![(0, 0); acc as usize];
        for (e, edge) in g.edges.iter().enumerate() {
            g.adj[fill[edge.u as usize] as usize] = (edge.v, e as EdgeId);
            fill[edge.u as usize] += 1;
            g.adj[fill[edge.v as usize] as usize] = (edge.u, e as EdgeId);
            fill[edge.v as usize] += 1;
        }
        // ascending neighbor id keeps relaxation order independent of construction order
        for v in 0..width * height {
            let (a, b) = (g.adj_start[v] as usize, g.adj_start[v + 1] as usize);
            g.adj[a..b].sort_unstable_by_key(|&(n, _)| n);
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.width * self.height
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn id(&self, i: usize, j: usize) -> VertexId {
        (j * self.width + i) as VertexId
    }

    pub fn grid_index(&self, v: VertexId) -> (usize, usize) {
        let v = v as usize;
        (v % self.width, v / self.width)
    }

    pub fn point(&self, v: VertexId) -> Point {
        let (i, j) = self.grid_index(v);
        Point::new((self.x0 + i as i64) as f64, (self.y0 + j as i64) as f64)
    }

    /// Nearest lattice vertex; ties round half away from zero, then clamp to the grid.
    pub fn snap(&self, p: Point) -> VertexId {
        let i = (p.x.round() as i64 - self.x0).clamp(0, self.width as i64 - 1);
        let j = (p.y.round() as i64 - self.y0).clamp(0, self.height as i64 - 1);
        self.id(i as usize, j as usize)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `v` with the connecting edge, in ascending neighbor id.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        let v = v as usize;
        &self.adj[self.adj_start[v] as usize..self.adj_start[v + 1] as usize]
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.neighbors(u).iter().find(|&&(n, _)| n == v).map(|&(_, e)| e)
    }

    /// Edges whose segments fall inside the axis-aligned box, inclusive, used to limit
    /// intersection scans to an obstacle's neighborhood.
    pub fn edges_near(&self, lo: Point, hi: Point) -> Vec<EdgeId> {
        let clamp_i = |x: f64| (x as i64 - self.x0).clamp(0, self.width as i64 - 1) as usize;
        let clamp_j = |y: f64| (y as i64 - self.y0).clamp(0, self.height as i64 - 1) as usize;
        if hi.x < self.x0 as f64 || hi.y < self.y0 as f64 {
            return Vec::new();
        }
        let (i_lo, i_hi) = (clamp_i(lo.x.floor() - 1.0), clamp_i(hi.x.ceil() + 1.0));
        let (j_lo, j_hi) = (clamp_j(lo.y.floor() - 1.0), clamp_j(hi.y.ceil() + 1.0));
        let mut out = Vec::new();
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let u = self.id(i, j);
                for &(n, e) in self.neighbors(u) {
                    if n > u {
                        out.push(e);
                    }
                }
            }
        }
        out
    }
}
