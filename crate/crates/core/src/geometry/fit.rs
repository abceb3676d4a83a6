use nalgebra::{DMatrix, DVector};

use super::spline::{basis_functions, knot_vector, uniform_params, Point2, Spline2D};
use super::GeometryError;

/// How data points are assigned curve parameters before fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum Parameterization {
    /// Cumulative chord length normalized to `[0, 1]`.
    ChordLength,
    /// `k / (m - 1)` for the `k`-th of `m` points.
    Uniform,
    /// Caller-supplied parameters, one per point, each in `[0, 1]`.
    Explicit(Vec<f64>),
}

/// Result of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineFit {
    pub spline: Spline2D,
    /// Parameter assigned to each input point.
    pub params: Vec<f64>,
    /// Largest Euclidean residual over the input points.
    pub max_residual: f64,
    pub rms_residual: f64,
}

/// Least-squares clamped cubic through `points` with chord-length parameters.
pub fn fit_spline(points: &[Point2], n_ctrl: usize) -> Result<SplineFit, GeometryError> {
    fit_spline_with(points, n_ctrl, Parameterization::ChordLength)
}

pub fn fit_spline_with(
    points: &[Point2],
    n_ctrl: usize,
    parameterization: Parameterization,
) -> Result<SplineFit, GeometryError> {
    fit_impl(points, n_ctrl, parameterization, false)
}

/// Fits a closed outline: the first point is appended so the curve returns to
/// its start, and the result carries `closed = true`.
pub fn fit_closed_spline(points: &[Point2], n_ctrl: usize) -> Result<SplineFit, GeometryError> {
    let mut loop_points = points.to_vec();
    if let Some(first) = points.first() {
        if points.last() != Some(first) {
            loop_points.push(*first);
        }
    }
    fit_impl(&loop_points, n_ctrl, Parameterization::ChordLength, true)
}

fn fit_impl(
    points: &[Point2],
    n_ctrl: usize,
    parameterization: Parameterization,
    closed: bool,
) -> Result<SplineFit, GeometryError> {
    if n_ctrl < Spline2D::MIN_CONTROL_POINTS {
        return Err(GeometryError::TooFewControlPoints { got: n_ctrl });
    }
    if points.len() < n_ctrl {
        return Err(GeometryError::TooFewPoints {
            got: points.len(),
            need: n_ctrl,
        });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(GeometryError::DegenerateInput);
    }

    let params = match parameterization {
        Parameterization::ChordLength => chord_length_params(points),
        Parameterization::Uniform => uniform_params(points.len()).collect(),
        Parameterization::Explicit(params) => {
            if params.len() != points.len() {
                return Err(GeometryError::ParamCountMismatch {
                    points: points.len(),
                    params: params.len(),
                });
            }
            if let Some(&t) = params.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(GeometryError::DomainError { t });
            }
            params
        }
    };

    let knots = knot_vector(n_ctrl);
    let m = points.len();
    let mut design = DMatrix::<f64>::zeros(m, n_ctrl);
    for (row, &t) in params.iter().enumerate() {
        let (span, basis) = basis_functions(&knots, n_ctrl, t);
        for (j, value) in basis.iter().enumerate() {
            design[(row, span - 3 + j)] = *value;
        }
    }
    let rhs = DMatrix::from_fn(m, 2, |r, c| if c == 0 { points[r].x } else { points[r].y });

    let svd = design.clone().svd(true, true);
    let solution = svd.solve(&rhs, 1e-12).map_err(|_| GeometryError::DegenerateInput)?;
    let control_points: Vec<Point2> = (0..n_ctrl)
        .map(|i| Point2::new(solution[(i, 0)], solution[(i, 1)]))
        .collect();
    let spline = Spline2D::new(control_points, closed)?;

    let fitted = &design * &solution;
    let residuals = DVector::from_iterator(
        m,
        (0..m).map(|r| (fitted[(r, 0)] - rhs[(r, 0)]).hypot(fitted[(r, 1)] - rhs[(r, 1)])),
    );
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / m as f64).sqrt();

    Ok(SplineFit {
        spline,
        params,
        max_residual,
        rms_residual,
    })
}

fn chord_length_params(points: &[Point2]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(points.len());
    let mut total = 0.0;
    acc.push(0.0);
    for w in points.windows(2) {
        total += w[0].distance(&w[1]);
        acc.push(total);
    }
    acc.into_iter().map(|d| d / total).collect()
}
