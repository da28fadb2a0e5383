use thiserror::Error;

use crate::jet::BidegreeOrder;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A normalizer (`f†f` or a tower trace) fell below the degeneracy threshold.
    #[error("degenerate point at level {level:?}: normalizer {value:.3e} below threshold {threshold:.1e}")]
    DegeneratePoint {
        level: Option<usize>,
        value: f64,
        threshold: f64,
    },

    #[error("insufficient jet order: need {needed}, have {available}")]
    InsufficientOrder {
        needed: BidegreeOrder,
        available: BidegreeOrder,
    },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("no convergence after {refinements} refinements (last change {last_change:.3e}, tolerance {tol:.1e})")]
    NoConvergence {
        refinements: usize,
        last_change: f64,
        tol: f64,
    },

    #[error("matrix is not in su(N): anti-Hermitian defect {anti_hermitian:.3e}, trace {trace:.3e}")]
    NotInAlgebra { anti_hermitian: f64, trace: f64 },

    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn degenerate(level: Option<usize>, value: f64, threshold: f64) -> Self {
        Error::DegeneratePoint {
            level,
            value,
            threshold,
        }
    }

    /// Attach a tower level to a degeneracy raised without one.
    pub fn at_level(self, k: usize) -> Self {
        match self {
            Error::DegeneratePoint {
                level: None,
                value,
                threshold,
            } => Error::DegeneratePoint {
                level: Some(k),
                value,
                threshold,
            },
            other => other,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegeneratePoint { .. })
    }
}
