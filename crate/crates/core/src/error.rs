use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("mass parameter m = {0} is not KAM-admissible (need 0 < m < 41/4, m != 1/4)")]
    InadmissibleMass(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vanishing recursion denominator at (m, n) = ({m}, {n})")]
    SingularCoefficient { m: i64, n: i64 },

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error("small divisor vanishes for non-resonant quadruple {0:?}")]
    VanishingDivisor([i64; 4]),

    #[error("integration blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
