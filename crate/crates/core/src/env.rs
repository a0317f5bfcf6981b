//! Continuous environment: region, disk obstacles with hidden status and sensor marks.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{RcdpError, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let region = Self { x_min, x_max, y_min, y_max };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(RcdpError::InvalidRegion("non-finite bound".into()));
        }
        if self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(RcdpError::InvalidRegion(format!(
                "empty extent [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.x_min.ceil() > self.x_max.floor() || self.y_min.ceil() > self.y_max.floor() {
            return Err(RcdpError::InvalidRegion("no integer lattice point inside".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Ground truth of an obstacle. Hidden from every planner except the full-information benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleStatus {
    True,
    False,
}

impl ObstacleStatus {
    pub fn is_blocking(self) -> bool {
        matches!(self, ObstacleStatus::True)
    }
}

/// What the navigating agent currently knows about an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knowledge {
    #[default]
    Ambiguous,
    ResolvedTrue,
    ResolvedFalse,
}

impl Knowledge {
    pub fn resolved_from(status: ObstacleStatus) -> Self {
        match status {
            ObstacleStatus::True => Knowledge::ResolvedTrue,
            ObstacleStatus::False => Knowledge::ResolvedFalse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub center: Point,
    pub radius: f64,
    pub status: ObstacleStatus,
    /// Sensor-reported probability that the obstacle is blocking.
    pub mark: f64,
    pub disamb_cost: f64,
    #[serde(default)]
    pub knowledge: Knowledge,
}

impl Obstacle {
    pub fn new(id: u32, center: Point, radius: f64, status: ObstacleStatus, mark: f64, disamb_cost: f64) -> Self {
        Self { id, center, radius, status, mark, disamb_cost, knowledge: Knowledge::Ambiguous }
    }

    pub fn covers(&self, p: Point) -> bool {
        self.center.distance(p) <= self.radius
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(RcdpError::InvalidEnvironment(format!("obstacle {}: {what}", self.id)));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if !(0.0..=1.0).contains(&self.mark) {
            return bad("mark outside [0, 1]");
        }
        if !(self.disamb_cost > 0.0 && self.disamb_cost.is_finite()) {
            return bad("disambiguation cost must be positive");
        }
        if !self.center.x.is_finite() || !self.center.y.is_finite() {
            return bad("non-finite center");
        }
        match (self.knowledge, self.status) {
            (Knowledge::ResolvedTrue, ObstacleStatus::False) | (Knowledge::ResolvedFalse, ObstacleStatus::True) => {
                bad("resolved knowledge contradicts status")
            }
            _ => Ok(()),
        }
    }
}

/// A full problem instance, as exchanged through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub region: Region,
    pub obstacles: Vec<Obstacle>,
    #[serde(rename = "s")]
    pub source: Point,
    #[serde(rename = "t")]
    pub target: Point,
}

impl Environment {
    pub fn new(region: Region, obstacles: Vec<Obstacle>, source: Point, target: Point) -> Result<Self> {
        let env = Self { region, obstacles, source, target };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        for p in [self.source, self.target] {
            if !self.region.contains(p) {
                return Err(RcdpError::OutsideRegion { x: p.x, y: p.y });
            }
        }
        let mut seen = HashSet::with_capacity(self.obstacles.len());
        for o in &self.obstacles {
            o.validate()?;
            if !seen.insert(o.id) {
                return Err(RcdpError::InvalidEnvironment(format!("duplicate obstacle id {}", o.id)));
            }
        }
        Ok(())
    }

    /// Obstacles whose disk covers the source or target point.
    pub fn endpoint_conflicts(&self) -> Vec<u32> {
        self.obstacles
            .iter()
            .filter(|o| o.covers(self.source) || o.covers(self.target))
            .map(|o| o.id)
            .collect()
    }

    pub fn obstacle(&self, id: u32) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn ambiguous_count(&self) -> usize {
        self.obstacles.iter().filter(|o| o.knowledge == Knowledge::Ambiguous).count()
    }

    /// Small six-obstacle instance on [0,22]x[0,14] with budget-relevant costs; all
    /// obstacles are false. Used by the examples and the policy tests.
    pub fn toy() -> Self {
        let spec = [
            (18.0, 8.0, 0.7, 1.0),
            (12.0, 6.0, 0.2, 2.0),
            (18.0, 11.0, 0.1, 1.0),
            (10.0, 8.0, 0.3, 1.0),
            (13.0, 10.0, 0.1, 2.0),
            (5.0, 10.0, 0.4, 2.0),
        ];
        let obstacles = spec
            .iter()
            .enumerate()
            .map(|(i, &(x, y, mark, delta))| Obstacle::new(i as u32, Point::new(x, y), 2.5, ObstacleStatus::False, mark, delta))
            .collect();
        Self {
            region: Region { x_min: 0.0, x_max: 22.0, y_min: 0.0, y_max: 14.0 },
            obstacles,
            source: Point::new(11.0, 14.0),
            target: Point::new(11.0, 1.0),
        }
    }

    /// Copy with every mark forced to its ground truth (a perfect sensor).
    pub fn with_perfect_marks(&self) -> Self {
        let mut env = self.clone();
        for o in &mut env.obstacles {
            o.mark = if o.status.is_blocking() { 1.0 } else { 0.0 };
        }
        env
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Environment = serde_json::from_str(text)?;
        env.validate()?;
        Ok(env)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
