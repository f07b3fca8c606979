use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContactError {
    /// The linear system `ι_Y dα + α(Y)α = rhs` could not be solved reliably.
    #[error("contact condition fails numerically at {at}: condition number {cond:.3e}")]
    SingularSystem { cond: f64, at: String },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported set: {0}")]
    UnsupportedSet(String),

    #[error("inverse evaluation failed: {0}")]
    InverseEvaluation(String),

    #[error("point outside chart: {0}")]
    OutsideChart(String),

    #[error("audit refused: {0}")]
    AuditRefused(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unknown manifold '{0}'")]
    UnknownManifold(String),
}

pub type Result<T> = std::result::Result<T, ContactError>;
