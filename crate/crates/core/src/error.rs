use thiserror::Error;

/// Errors produced by the library. Variants map onto the failure classes
/// callers are expected to react to differently (raise a budget, pick a
/// different model, fix a config file, ...).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent moment: {0}")]
    Divergence(String),

    #[error("node budget exceeded: {nodes} nodes generated with budget {budget} (raise the budget or lower the depth)")]
    Explosion { nodes: u64, budget: u64 },

    #[error("unstable model: {0}")]
    Instability(String),

    #[error("exact enumeration not applicable: {0}")]
    OracleDomain(String),

    #[error("support limit exceeded: {size} atoms > limit {limit}")]
    Limit { size: usize, limit: usize },

    #[error("root bracket error: {0}")]
    Bracket(String),

    #[error("regime assumptions violated: {0}")]
    Regime(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
