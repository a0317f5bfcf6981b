//! Scenario specifications and seeded environment generation.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, Obstacle, ObstacleStatus, Region};
use crate::error::{RcdpError, Result};
use crate::experiments::pointproc::{gen_matern, gen_strauss, gen_uniform, MaternParams};
use crate::geometry::Point;
use crate::policy::{PolicyConfig, PolicyKind};
use crate::risk::{sample_marks, RiskKind, SensorModel};

/// Independent RNG streams within one replication.
pub mod stream {
    pub const POINTS: u64 = 1;
    pub const STATUSES: u64 = 2;
    pub const MARKS: u64 = 3;
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(seed, replication, stream)`: `splitmix64(splitmix64(seed ^ splitmix64(index)) ^ stream)`.
pub fn mix_seed(seed: u64, index: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(index)) ^ stream)
}

pub fn stream_rng(seed: u64, index: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, index, stream))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub region: Region,
    /// Obstacle centers are drawn inside this window.
    pub window: Region,
    pub source: Point,
    pub target: Point,
    pub radius: f64,
    /// Length scale relative to the 100 x 50 reference layout; scales inhibition and
    /// isolation distances.
    pub scale: f64,
}

impl Layout {
    /// 100 x 50 region, centers in [10,90] x [10,40], radius 5.
    pub fn full() -> Self {
        Self {
            region: Region { x_min: 0.0, x_max: 100.0, y_min: 0.0, y_max: 50.0 },
            window: Region { x_min: 10.0, x_max: 90.0, y_min: 10.0, y_max: 40.0 },
            source: Point::new(50.0, 50.0),
            target: Point::new(50.0, 1.0),
            radius: 5.0,
            scale: 1.0,
        }
    }

    /// Half-scale layout: 51 x 26 lattice, radius 2.5.
    pub fn desk() -> Self {
        Self {
            region: Region { x_min: 0.0, x_max: 50.0, y_min: 0.0, y_max: 25.0 },
            window: Region { x_min: 5.0, x_max: 45.0, y_min: 5.0, y_max: 20.0 },
            source: Point::new(25.0, 25.0),
            target: Point::new(25.0, 1.0),
            radius: 2.5,
            scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spatial {
    /// `r_inhibit` is given at reference scale and multiplied by the layout scale.
    Strauss { r_inhibit: f64, gamma: f64, sweeps: usize },
    Uniform,
    Matern { parent_intensity: f64, cluster_radius: f64, mean_offspring: f64 },
}

impl Default for Spatial {
    fn default() -> Self {
        Spatial::Strauss { r_inhibit: 7.0, gamma: 0.5, sweeps: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostRule {
    /// Every obstacle costs 5.
    #[default]
    Uniform5,
    /// 3 for false, 4 for true; +1 when isolated, -1 when crowded; clamped to [2, 6].
    Heterogeneous,
}

/// Nearest-neighbor distances at reference scale for the heterogeneous rule.
pub const ISOLATED_DISTANCE: f64 = 14.0;
pub const CROWDED_DISTANCE: f64 = 8.0;

pub fn assign_costs(statuses: &[ObstacleStatus], points: &[Point], rule: CostRule, scale: f64) -> Vec<f64> {
    match rule {
        CostRule::Uniform5 => vec![5.0; points.len()],
        CostRule::Heterogeneous => (0..points.len())
            .map(|i| {
                let nn = (0..points.len())
                    .filter(|&j| j != i)
                    .map(|j| points[i].distance(points[j]))
                    .fold(f64::INFINITY, f64::min);
                let mut c: f64 = if statuses[i].is_blocking() { 4.0 } else { 3.0 };
                if nn > ISOLATED_DISTANCE * scale {
                    c += 1.0;
                } else if nn < CROWDED_DISTANCE * scale {
                    c -= 1.0;
                }
                c.clamp(2.0, 6.0)
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Count cap on disambiguations.
    Simplified { n_max: u32 },
    /// Total disambiguation cost cap.
    General { delta_max: f64 },
}

impl Budget {
    pub fn label(&self) -> String {
        match self {
            Budget::Simplified { n_max } => format!("nmax{n_max}"),
            Budget::General { delta_max } => format!("dmax{delta_max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub n: usize,
    #[serde(default = "default_rho")]
    pub rho_t: f64,
    #[serde(default)]
    pub spatial: Spatial,
    /// Sensor precision in [0, 4].
    #[serde(default = "default_precision")]
    pub sensor_precision: f64,
    #[serde(default)]
    pub cost_rule: CostRule,
    pub budget: Budget,
    #[serde(default = "default_policies")]
    pub policies: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "Layout::desk")]
    pub layout: Layout,
}

fn default_rho() -> f64 {
    0.2
}

fn default_precision() -> f64 {
    2.0
}

fn default_replications() -> usize {
    100
}

pub fn default_policies() -> Vec<String> {
    ["greedy-rd", "greedy-dt", "rcdp:rd", "rcdp:dt", "rcdp:lu-delta", "rcdp:lu:15", "rcdp:lu:30"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl ScenarioSpec {
    pub fn new(id: impl Into<String>, n: usize, budget: Budget) -> Self {
        Self {
            id: id.into(),
            n,
            rho_t: default_rho(),
            spatial: Spatial::default(),
            sensor_precision: default_precision(),
            cost_rule: CostRule::default(),
            budget,
            policies: default_policies(),
            replications: default_replications(),
            seed: 0,
            layout: Layout::desk(),
        }
    }

    pub fn n_true(&self) -> usize {
        (self.rho_t * self.n as f64).round() as usize
    }

    pub fn sensor(&self) -> Result<SensorModel> {
        SensorModel::from_precision(self.sensor_precision)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RcdpError::Config(format!("scenario `{}`: {m}", self.id)));
        if !(0.0..=1.0).contains(&self.rho_t) {
            return bad(format!("rho_t {} outside [0, 1]", self.rho_t));
        }
        if self.replications == 0 {
            return bad("replications must be positive".into());
        }
        if self.policies.is_empty() {
            return bad("no policies".into());
        }
        if !(self.layout.radius > 0.0 && self.layout.scale > 0.0) {
            return bad("layout radius and scale must be positive".into());
        }
        self.layout.region.validate()?;
        self.layout.window.validate()?;
        self.sensor()?;
        for p in self.policy_configs()? {
            p.validate()?;
        }
        Ok(())
    }

    /// Policies with budgets, sensor, and default prior filled in.
    pub fn policy_configs(&self) -> Result<Vec<PolicyConfig>> {
        let sensor = self.sensor()?;
        self.policies
            .iter()
            .map(|name| {
                let mut kind: PolicyKind = name.parse()?;
                if let PolicyKind::Rcdp { risk } = &mut kind {
                    if matches!(risk.kind, RiskKind::LuBayes { .. }) {
                        *risk = risk.with_sensor(sensor).with_default_prior(self.rho_t);
                    }
                }
                Ok(self.config_for(kind))
            })
            .collect()
    }

    pub fn config_for(&self, kind: PolicyKind) -> PolicyConfig {
        match self.budget {
            Budget::Simplified { n_max } => PolicyConfig::counted(kind, n_max),
            Budget::General { delta_max } => PolicyConfig::new(kind, delta_max),
        }
    }

    /// Environment for one replication. Points, statuses, and marks come from separate
    /// streams, so changing the sensor leaves layout and truth unchanged.
    pub fn generate(&self, replication: u64) -> Result<Environment> {
        let layout = &self.layout;
        let mut points_rng = stream_rng(self.seed, replication, stream::POINTS);
        let points = loop {
            let points = match self.spatial {
                Spatial::Strauss { r_inhibit, gamma, sweeps } => {
                    gen_strauss(&layout.window, self.n, r_inhibit * layout.scale, gamma, sweeps, &mut points_rng)?
                }
                Spatial::Uniform => gen_uniform(&layout.window, self.n, &mut points_rng),
                Spatial::Matern { parent_intensity, cluster_radius, mean_offspring } => gen_matern(
                    &layout.window,
                    MaternParams { parent_intensity, cluster_radius: cluster_radius * layout.scale, mean_offspring },
                    Some(self.n),
                    &mut points_rng,
                )?,
            };
            // redraw layouts that cover an endpoint
            let covers = |p: &Point| p.distance(layout.source) <= layout.radius || p.distance(layout.target) <= layout.radius;
            if !points.iter().any(covers) {
                break points;
            }
        };

        let mut statuses = vec![ObstacleStatus::False; self.n];
        let mut status_rng = stream_rng(self.seed, replication, stream::STATUSES);
        for i in sample(&mut status_rng, self.n, self.n_true().min(self.n)) {
            statuses[i] = ObstacleStatus::True;
        }
        let marks = sample_marks(&statuses, &self.sensor()?, &mut stream_rng(self.seed, replication, stream::MARKS));
        let costs = assign_costs(&statuses, &points, self.cost_rule, layout.scale);
        let obstacles = (0..self.n)
            .map(|i| Obstacle::new(i as u32, points[i], layout.radius, statuses[i], marks[i], costs[i]))
            .collect();
        Environment::new(layout.region, obstacles, layout.source, layout.target)
    }
}

/// A named list of scenarios, the unit of a TOML spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
}

impl CampaignSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| RcdpError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RcdpError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(RcdpError::Config("campaign has no scenarios".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for s in &self.scenarios {
            if !ids.insert(&s.id) {
                return Err(RcdpError::Config(format!("duplicate scenario id `{}`", s.id)));
            }
            s.validate()?;
        }
        Ok(())
    }

    /// The fifteen density/budget settings: for n = 20, 40, 80 three count caps
    /// (uniform costs) and two cost budgets (heterogeneous costs).
    pub fn standard_grid(layout: Layout, replications: usize, seed: u64) -> Self {
        let mut scenarios = Vec::new();
        for (n, budgets) in [(20usize, [4.0, 6.0]), (40, [6.0, 8.0]), (80, [8.0, 10.0])] {
            let mut push = |budget: Budget, rule: CostRule| {
                let mut s = ScenarioSpec::new(format!("n{n}-{}", budget.label()), n, budget);
                s.cost_rule = rule;
                s.replications = replications;
                s.layout = layout;
                // TOML integers are signed 64-bit
                s.seed = mix_seed(seed, n as u64, budget_key(&budget)) >> 1;
                scenarios.push(s);
            };
            for n_max in 1..=3 {
                push(Budget::Simplified { n_max }, CostRule::Uniform5);
            }
            for delta_max in budgets {
                push(Budget::General { delta_max }, CostRule::Heterogeneous);
            }
        }
        Self { name: "standard-grid".into(), scenarios }
    }
}

fn budget_key(b: &Budget) -> u64 {
    match *b {
        Budget::Simplified { n_max } => n_max as u64,
        Budget::General { delta_max } => 1000 + delta_max as u64,
    }
}
