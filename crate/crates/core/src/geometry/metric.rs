use super::spline::{uniform_params, Spline2D};
use super::GeometryError;
use crate::stl::SampledSignal;

pub const DEFAULT_QUADRATURE_SAMPLES: usize = 1024;

/// Order `p` and resolution of the `L_p` distance between two splines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveMetricParams {
    /// `p >= 1`, or `f64::INFINITY` for the sup distance.
    pub p: f64,
    pub samples: usize,
}

impl CurveMetricParams {
    pub fn new(p: f64, samples: usize) -> Result<Self, GeometryError> {
        let params = Self { p, samples };
        params.validate()?;
        Ok(params)
    }

    pub fn sup(samples: usize) -> Self {
        Self {
            p: f64::INFINITY,
            samples,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.p.is_nan() || self.p < 1.0 {
            return Err(GeometryError::InvalidOrder { p: self.p });
        }
        if self.samples < 2 {
            return Err(GeometryError::TooFewSamples { got: self.samples });
        }
        Ok(())
    }
}

impl Default for CurveMetricParams {
    fn default() -> Self {
        Self {
            p: 2.0,
            samples: DEFAULT_QUADRATURE_SAMPLES,
        }
    }
}

fn separations(y1: &Spline2D, y2: &Spline2D, samples: usize) -> Vec<f64> {
    uniform_params(samples)
        .map(|t| y1.eval_unchecked(t).distance(&y2.eval_unchecked(t)))
        .collect()
}

/// `‖y1(t_k) − y2(t_k)‖` on the uniform grid `t_k = k / (samples − 1)`,
/// as a signal named `d1`.
pub fn pointwise_distance_signal(y1: &Spline2D, y2: &Spline2D, samples: usize) -> Result<SampledSignal, GeometryError> {
    if samples < 2 {
        return Err(GeometryError::TooFewSamples { got: samples });
    }
    let timestamps = uniform_params(samples).collect();
    let values = separations(y1, y2, samples);
    Ok(SampledSignal::new("d1", timestamps, values).expect("uniform grid and finite separations form a valid signal"))
}

/// `d_p(y1, y2) = (∫₀¹ ‖y1(t) − y2(t)‖^p dt)^{1/p}` by the trapezoid rule, or
/// the maximum separation over the grid when `p` is infinite.
pub fn distance_lp(y1: &Spline2D, y2: &Spline2D, params: CurveMetricParams) -> Result<f64, GeometryError> {
    params.validate()?;
    let d = separations(y1, y2, params.samples);
    if params.p.is_infinite() {
        return Ok(d.iter().copied().fold(0.0, f64::max));
    }
    let p = params.p;
    let h = 1.0 / (params.samples - 1) as f64;
    let n = d.len();
    let integral: f64 = d
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            w * v.powf(p)
        })
        .sum::<f64>()
        * h;
    Ok(integral.powf(1.0 / p))
}
