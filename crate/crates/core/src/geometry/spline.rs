use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use super::GeometryError;

pub(crate) const DEGREE: usize = 3;

/// A point in the plane. Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (*self - *other).norm()
    }

    pub fn dot(&self, other: &Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(&self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(&self, other: &Point2, s: f64) -> Point2 {
        *self + (*other - *self) * s
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Clamped cubic B-spline on the parameter domain `[0, 1]` with uniformly
/// spaced interior knots.
///
/// The knot vector is implied by the control point count `n`:
/// four zeros, `n - 4` interior knots at `i / (n - 3)`, four ones. The curve
/// therefore starts at the first control point and ends at the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineFile", into = "SplineFile")]
pub struct Spline2D {
    control_points: Vec<Point2>,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
struct SplineFile {
    closed: bool,
    control_points: Vec<Point2>,
}

impl TryFrom<SplineFile> for Spline2D {
    type Error = GeometryError;

    fn try_from(file: SplineFile) -> Result<Self, Self::Error> {
        Spline2D::new(file.control_points, file.closed)
    }
}

impl From<Spline2D> for SplineFile {
    fn from(s: Spline2D) -> Self {
        SplineFile {
            closed: s.closed,
            control_points: s.control_points,
        }
    }
}

impl Spline2D {
    pub const MIN_CONTROL_POINTS: usize = DEGREE + 1;

    pub fn new(control_points: Vec<Point2>, closed: bool) -> Result<Self, GeometryError> {
        if control_points.len() < Self::MIN_CONTROL_POINTS {
            return Err(GeometryError::TooFewControlPoints {
                got: control_points.len(),
            });
        }
        if control_points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { control_points, closed })
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.control_points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same curve traversed backwards: `reversed().eval(t) == eval(1 - t)`.
    ///
    /// Holds exactly because the clamped uniform knot vector is symmetric.
    pub fn reversed(&self) -> Spline2D {
        let mut control_points = self.control_points.clone();
        control_points.reverse();
        Spline2D {
            control_points,
            closed: self.closed,
        }
    }

    /// Applies `f` to every control point. Affine maps commute with B-spline
    /// evaluation, so this is the image of the curve under `f` when `f` is affine.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Result<Spline2D, GeometryError> {
        Spline2D::new(self.control_points.iter().copied().map(f).collect(), self.closed)
    }

    pub fn translated(&self, offset: Point2) -> Spline2D {
        Spline2D {
            control_points: self.control_points.iter().map(|p| *p + offset).collect(),
            closed: self.closed,
        }
    }

    pub fn eval(&self, t: f64) -> Result<Point2, GeometryError> {
        check_domain(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// First derivative with respect to the parameter.
    pub fn derivative(&self, t: f64) -> Result<Point2, GeometryError> {
        check_domain(t)?;
        let knots = knot_vector(self.len());
        let n = self.len();
        // Derivative curve: degree 2 over the inner knot vector.
        let deriv: Vec<Point2> = (0..n - 1)
            .map(|i| {
                let span = knots[i + DEGREE + 1] - knots[i + 1];
                (self.control_points[i + 1] - self.control_points[i]) * (DEGREE as f64 / span)
            })
            .collect();
        let inner = &knots[1..knots.len() - 1];
        Ok(de_boor(&deriv, inner, DEGREE - 1, t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> Point2 {
        let knots = knot_vector(self.len());
        de_boor(&self.control_points, &knots, DEGREE, t)
    }

    /// Evaluates at `samples` uniform parameters `k / (samples - 1)`.
    pub fn sample_uniform(&self, samples: usize) -> Vec<Point2> {
        uniform_params(samples).map(|t| self.eval_unchecked(t)).collect()
    }

    /// Polyline length over `samples` uniform parameters.
    pub fn approx_length(&self, samples: usize) -> f64 {
        self.sample_uniform(samples.max(2))
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .sum()
    }
}

fn check_domain(t: f64) -> Result<(), GeometryError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(GeometryError::DomainError { t })
    }
}

pub(crate) fn uniform_params(samples: usize) -> impl Iterator<Item = f64> {
    let last = samples.saturating_sub(1).max(1) as f64;
    (0..samples).map(move |k| k as f64 / last)
}

/// Clamped uniform knot vector for `n` control points of a cubic.
pub(crate) fn knot_vector(n: usize) -> Vec<f64> {
    let segments = n - DEGREE;
    let mut knots = Vec::with_capacity(n + DEGREE + 1);
    knots.extend(std::iter::repeat_n(0.0, DEGREE + 1));
    knots.extend((1..segments).map(|i| i as f64 / segments as f64));
    knots.extend(std::iter::repeat_n(1.0, DEGREE + 1));
    knots
}

/// Index `k` of the knot span with `knots[k] <= t < knots[k + 1]`, with the
/// right end of the domain folded into the last non-empty span.
pub(crate) fn find_span(knots: &[f64], degree: usize, n_ctrl: usize, t: f64) -> usize {
    if t >= knots[n_ctrl] {
        return n_ctrl - 1;
    }
    let mut lo = degree;
    let mut hi = n_ctrl;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

fn de_boor(ctrl: &[Point2], knots: &[f64], degree: usize, t: f64) -> Point2 {
    let k = find_span(knots, degree, ctrl.len(), t);
    let mut d: Vec<Point2> = (0..=degree).map(|j| ctrl[j + k - degree]).collect();
    for r in 1..=degree {
        for j in (r..=degree).rev() {
            let i = j + k - degree;
            let denom = knots[i + degree + 1 - r] - knots[i];
            let alpha = if denom == 0.0 { 0.0 } else { (t - knots[i]) / denom };
            d[j] = d[j - 1] * (1.0 - alpha) + d[j] * alpha;
        }
    }
    d[degree]
}

/// Nonzero cubic basis values at `t`: returns the span index `k` and
/// `N_{k-3..=k}(t)`.
pub(crate) fn basis_functions(knots: &[f64], n_ctrl: usize, t: f64) -> (usize, [f64; DEGREE + 1]) {
    let k = find_span(knots, DEGREE, n_ctrl, t);
    let mut n = [0.0; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = t - knots[k + 1 - j];
        right[j] = knots[k + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    (k, n)
}
