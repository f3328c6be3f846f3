use thiserror::Error;

/// Errors raised by fitting, testing, simulation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("ill-posed fit: parameter dimension {d} is not smaller than sample size {n}")]
    IllPosed { d: usize, n: usize },

    #[error("least-squares iteration diverged: {0}")]
    Diverged(String),

    #[error("least-squares fit did not reach a stationary point (gradient norm {gradient_norm:e})")]
    NotConverged { gradient_norm: f64 },

    #[error("gradient Gram matrix is singular (the identifiability condition on E[g' g'^T] fails): {0}")]
    RankDeficient(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("insufficient sample: n = {n} but at least p + 2 = {required} rows are needed")]
    InsufficientSample { n: usize, required: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("simulation failed: {failures} of {replications} replications errored (first: {first})")]
    SimulationFailures { failures: usize, replications: usize, first: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidData(_) => "invalid_data",
            Error::IllPosed { .. } => "ill_posed",
            Error::Diverged(_) => "diverged",
            Error::NotConverged { .. } => "not_converged",
            Error::RankDeficient(_) => "rank_deficient",
            Error::DegenerateVariance(_) => "degenerate_variance",
            Error::InsufficientSample { .. } => "insufficient_sample",
            Error::Contract(_) => "contract_violation",
            Error::UnknownModel(_) => "unknown_model",
            Error::Config(_) => "config",
            Error::SimulationFailures { .. } => "simulation_failures",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
