use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all {n_items} items have already been revealed")]
    ExhaustedPreferences { n_items: usize },
    #[error("no available item remains unrevealed")]
    NoAvailableItem,
    #[error("instance must have at least one agent")]
    EmptyInstance,
    #[error("{agents} agents but {items} items; instances must be square")]
    SizeMismatch { agents: usize, items: usize },
    #[error("theta grid must be sorted with values in [0, 1]")]
    BadThetaGrid,
    #[error("exact enumeration supports n <= {max}, got {n}")]
    OracleTooLarge { n: usize, max: usize },
    #[error("index {0} out of range")]
    BadIndex(usize),
    #[error("theta = {0} is outside [0, 1]")]
    BadTheta(f64),
    #[error("urn sizes must be strictly decreasing and positive")]
    BadUrnSpec,
    #[error("probability {0} is outside (0, 1]")]
    BadProb(f64),
    #[error("adaptive quadrature did not reach tolerance {tol:e} on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, tol: f64 },
    #[error("scoring rule has no declared limit weights")]
    NoLimitRule,
    #[error("scoring rule gives u(1) = u(n); order bias is undefined")]
    DegenerateRule,
    #[error("invalid scoring rule: {0}")]
    InvalidRule(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
