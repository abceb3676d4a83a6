//! Parametric planar splines, least-squares fitting, and `L_p` distances
//! between curves sharing the parameter domain `[0, 1]`.

mod fit;
mod metric;
mod spline;

pub use fit::{fit_closed_spline, fit_spline, fit_spline_with, Parameterization, SplineFit};
pub use metric::{distance_lp, pointwise_distance_signal, CurveMetricParams, DEFAULT_QUADRATURE_SAMPLES};
pub use spline::{Point2, Spline2D};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("too few points to fit: got {got}, need at least {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("a cubic spline needs at least 4 control points, got {got}")]
    TooFewControlPoints { got: usize },
    #[error("degenerate input: all points coincide")]
    DegenerateInput,
    #[error("parameter {t} outside [0, 1]")]
    DomainError { t: f64 },
    #[error("L_p order must be >= 1, got {p}")]
    InvalidOrder { p: f64 },
    #[error("need at least 2 samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("{points} points but {params} parameters")]
    ParamCountMismatch { points: usize, params: usize },
}
