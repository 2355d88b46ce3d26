use thiserror::Error;

use crate::cone_transform::LegendreResult;

/// Errors raised by the geometry, moment and transform routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("origin is not an interior point of the body (margin {margin:.3e})")]
    OriginNotInterior { margin: f64 },
    #[error("halfspace description is unbounded")]
    Unbounded,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("cone is not proper: {0}")]
    NotProper(String),
    #[error("split solver stalled after {iterations} iterations (gap {gap:.3e})")]
    ToleranceNotReached { iterations: usize, gap: f64 },
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is outside the interior of the dual cone (min ray product {min_product:.3e})")]
    OutsideDualInterior { min_product: f64 },
    #[error("point is outside the interior of the cone (max facet product {max_product:.3e})")]
    NotInteriorPrimal { max_product: f64 },
    #[error("Newton iteration did not converge; best gradient residual {:.3e}", .best.final_gradient_norm)]
    NoConvergence { best: Box<LegendreResult> },
    #[error("point is not interior to the body")]
    PointNotInterior,
    #[error("intersection V ∩ (x − V) is empty or lower dimensional")]
    EmptyIntersection,
    #[error("barycenter of the polar body could not be computed: {0}")]
    BarycenterNotComputable(String),
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
    #[error("point lies outside the cone")]
    OutsideCone,
    #[error("fixture missing: {0}")]
    FixtureMissing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
