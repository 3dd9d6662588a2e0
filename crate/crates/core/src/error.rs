use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range (0..{len})")]
    Index { index: usize, len: usize },

    #[error("distance {distance} m is below the reference distance {d0} m")]
    BelowReferenceDistance { distance: f64, d0: f64 },

    /// Zero echo energy or a non-positive Schur complement: θ cannot be
    /// estimated from this design.
    #[error("target angle is not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("normalized rate {value} lies outside the logistic range ({lower}, {upper})")]
    RateOutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("conic solver returned {status:?}: {detail}")]
    Solver { status: SolveStatus, detail: String },

    #[error("no feasible rank-one candidate after {trials} draws (best violation {best_violation:.3e})")]
    Randomization { trials: usize, best_violation: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors that mean "no design exists for these thresholds" rather than a
    /// numerical breakdown.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::Randomization { .. }
                | Error::RateOutOfRange { .. }
                | Error::Solver {
                    status: SolveStatus::Infeasible,
                    ..
                }
        )
    }
}
