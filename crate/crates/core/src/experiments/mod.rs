//! Seeded Monte Carlo experiments: obstacle layouts, scenario grids, campaigns, and metrics.

pub mod campaign;
pub mod metrics;
pub mod pointproc;
pub mod scenario;

pub use campaign::{compare_reduction, run_campaign, run_scenario, sweep_alpha, sweep_sensor, CampaignResult, RunOptions};
pub use metrics::{MetricsRow, ReplicationRecord};
pub use scenario::{Budget, CampaignSpec, CostRule, Layout, ScenarioSpec, Spatial};
