use thiserror::Error;

/// Errors raised by environment construction, planning, and the experiment runner.
#[derive(Debug, Error)]
pub enum RcdpError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("degenerate endpoints: source and target snap to the same vertex")]
    DegenerateEndpoints,
    #[error("point ({x}, {y}) lies outside the region")]
    OutsideRegion { x: f64, y: f64 },
    #[error("invalid risk model: {0}")]
    InvalidRiskModel(String),
    #[error("obstacle {0} is centered at the target")]
    ObstacleAtTarget(u32),
    #[error("unknown obstacle id {0}")]
    UnknownObstacle(u32),
    #[error("double disambiguation of obstacle {0}")]
    DoubleDisambiguation(u32),
    #[error("oracle scale limit: {active} active vertices exceeds {limit}")]
    OracleScaleLimit { active: usize, limit: usize },
    #[error("not a cut: target remains reachable after removing the vertex set")]
    NotACut,
    #[error("enumeration guard: {ambiguous} ambiguous obstacles exceeds {limit}; request a sampled estimate")]
    EnumerationGuard { ambiguous: usize, limit: usize },
    #[error("point process: {0}")]
    PointProcess(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed results: {0}")]
    Results(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = RcdpError> = std::result::Result<T, E>;
