//! Spatial point patterns for obstacle centers.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::env::Region;
use crate::error::{RcdpError, Result};
use crate::geometry::Point;

pub fn uniform_point<R: Rng + ?Sized>(window: &Region, rng: &mut R) -> Point {
    Point::new(rng.gen_range(window.x_min..=window.x_max), rng.gen_range(window.y_min..=window.y_max))
}

pub fn gen_uniform<R: Rng + ?Sized>(window: &Region, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n).map(|_| uniform_point(window, rng)).collect()
}

/// Number of unordered pairs closer than `r`.
pub fn close_pairs(points: &[Point], r: f64) -> usize {
    let mut count = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].distance(points[j]) < r {
                count += 1;
            }
        }
    }
    count
}

/// Uniform bucket grid over the window with cell side at least `r`, so every neighbor
/// within `r` sits in the 3x3 block around a point's cell.
struct CellGrid {
    x0: f64,
    y0: f64,
    side: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<(usize, Point)>>,
}

impl CellGrid {
    fn new(window: &Region, r: f64, points: &[Point]) -> Self {
        let span = window.width().max(window.height()).max(f64::MIN_POSITIVE);
        let side = r.max(span / 256.0);
        let nx = (window.width() / side).floor() as usize + 1;
        let ny = (window.height() / side).floor() as usize + 1;
        let mut g = Self { x0: window.x_min, y0: window.y_min, side, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for (k, &p) in points.iter().enumerate() {
            let c = g.cell(p);
            g.cells[c].push((k, p));
        }
        g
    }

    fn coords(&self, p: Point) -> (usize, usize) {
        let i = (((p.x - self.x0) / self.side).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((p.y - self.y0) / self.side).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    fn cell(&self, p: Point) -> usize {
        let (i, j) = self.coords(p);
        j * self.nx + i
    }

    fn close_to(&self, skip: usize, p: Point, r: f64) -> i64 {
        let (i, j) = self.coords(p);
        let r2 = r * r;
        let mut count = 0;
        for cj in j.saturating_sub(1)..=(j + 1).min(self.ny - 1) {
            for ci in i.saturating_sub(1)..=(i + 1).min(self.nx - 1) {
                for &(k, q) in &self.cells[cj * self.nx + ci] {
                    if k != skip && (q.x - p.x).powi(2) + (q.y - p.y).powi(2) < r2 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    fn relocate(&mut self, k: usize, from: Point, to: Point) {
        let (a, b) = (self.cell(from), self.cell(to));
        let pos = self.cells[a].iter().position(|&(m, _)| m == k).expect("point is indexed");
        self.cells[a].swap_remove(pos);
        self.cells[b].push((k, to));
    }
}

/// Fixed-n Strauss pattern by Metropolis-Hastings: each step moves one uniformly chosen
/// point to a uniform location and accepts with probability `min(1, gamma^dpairs)`.
/// One sweep is `n` proposals.
pub fn gen_strauss<R: Rng + ?Sized>(
    window: &Region,
    n: usize,
    r_inhibit: f64,
    gamma: f64,
    sweeps: usize,
    rng: &mut R,
) -> Result<Vec<Point>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(RcdpError::PointProcess(format!("interaction parameter must lie in (0, 1], got {gamma}")));
    }
    if !(r_inhibit >= 0.0) {
        return Err(RcdpError::PointProcess(format!("inhibition distance must be non-negative, got {r_inhibit}")));
    }
    let mut points = gen_uniform(window, n, rng);
    if n < 2 || gamma == 1.0 || r_inhibit == 0.0 {
        return Ok(points);
    }
    let mut grid = CellGrid::new(window, r_inhibit, &points);
    let ln_gamma = gamma.ln();
    let mut accepted = 0usize;
    let proposals = sweeps * n;
    for _ in 0..proposals {
        let i = rng.gen_range(0..n);
        let candidate = uniform_point(window, rng);
        let delta = grid.close_to(i, candidate, r_inhibit) - grid.close_to(i, points[i], r_inhibit);
        if delta <= 0 || rng.gen::<f64>().ln() < delta as f64 * ln_gamma {
            grid.relocate(i, points[i], candidate);
            points[i] = candidate;
            accepted += 1;
        }
    }
    if proposals > 0 && accepted == 0 {
        return Err(RcdpError::PointProcess(format!(
            "Strauss sampler stalled: 0 of {proposals} proposals accepted (n = {n}, r = {r_inhibit}, gamma = {gamma})"
        )));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    /// Parents per unit area.
    pub parent_intensity: f64,
    pub cluster_radius: f64,
    pub mean_offspring: f64,
}

/// Matern cluster pattern clipped to `window`. With `target = Some(n)` the pattern is
/// thinned at random or topped up with further realizations until it has exactly `n` points.
pub fn gen_matern<R: Rng + ?Sized>(window: &Region, params: MaternParams, target: Option<usize>, rng: &mut R) -> Result<Vec<Point>> {
    let MaternParams { parent_intensity, cluster_radius, mean_offspring } = params;
    if !(parent_intensity >= 0.0 && cluster_radius > 0.0 && mean_offspring > 0.0) {
        return Err(RcdpError::PointProcess(format!("invalid Matern parameters {params:?}")));
    }
    let mut points = Vec::new();
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        points.extend(matern_once(window, params, rng)?);
        match target {
            None => return Ok(points),
            Some(n) if points.len() >= n => {
                // partial Fisher-Yates keeps a uniform subset
                for k in 0..n {
                    let j = rng.gen_range(k..points.len());
                    points.swap(k, j);
                }
                points.truncate(n);
                return Ok(points);
            }
            Some(_) if parent_intensity == 0.0 => break,
            Some(_) => {}
        }
    }
    Err(RcdpError::PointProcess(format!("Matern process produced {} of {:?} points after {ATTEMPTS} attempts", points.len(), target)))
}

fn matern_once<R: Rng + ?Sized>(window: &Region, p: MaternParams, rng: &mut R) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    let expected_parents = p.parent_intensity * window.area();
    if expected_parents == 0.0 {
        return Ok(out);
    }
    let poisson = |mean: f64| Poisson::new(mean).map_err(|e| RcdpError::PointProcess(e.to_string()));
    let parents = poisson(expected_parents)?.sample(rng) as usize;
    let offspring = poisson(p.mean_offspring)?;
    for _ in 0..parents {
        let c = uniform_point(window, rng);
        let k = offspring.sample(rng) as usize;
        for _ in 0..k {
            let rad = p.cluster_radius * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let q = Point::new(c.x + rad * th.cos(), c.y + rad * th.sin());
            if window.contains(q) {
                out.push(q);
            }
        }
    }
    Ok(out)
}
