//! Sinusoidal road variants filtered by an STL specification.
//!
//! A variant offsets the base curve by `e(t) = Σ Aᵢ sin(ωᵢ t + φᵢ)` along a
//! chosen direction and refits it on the base's own parameter grid. Two
//! signals are monitored on the time axis `t · horizon`: `e1 = |e(t)|` and
//! `d1`, the pointwise distance between the variant and a reference curve.

use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil;
use crate::geometry::{
    distance_lp, fit_spline_with, pointwise_distance_signal, CurveMetricParams, GeometryError, Parameterization,
    Point2, Spline2D,
};
use crate::stl::{monitor, SampledSignal, StlError, StlFormula, Trace, Verdict};

pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_SAMPLES: usize = 256;
pub const E1: &str = "e1";
pub const D1: &str = "d1";

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("invalid perturbation parameters: {0}")]
    InvalidParams(String),
    #[error(
        "only {accepted} of {requested} variants accepted after {attempts} attempts \
         (acceptance rate {acceptance_rate:.3})"
    )]
    BudgetExhausted {
        requested: usize,
        accepted: usize,
        attempts: usize,
        acceptance_rate: f64,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error("cannot write batch: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    /// Radians per unit of spline parameter.
    pub angular_frequency: f64,
    pub phase: f64,
}

impl SineTerm {
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.angular_frequency * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Unit normal of the base curve (tangent rotated counter-clockwise).
    #[default]
    Normal,
    /// The `+y` axis regardless of curve direction.
    FixedAxisY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidParams {
    pub terms: Vec<SineTerm>,
    pub direction: Direction,
    /// Upper bound on any term's amplitude.
    pub amplitude_max: f64,
}

impl SinusoidParams {
    pub fn new(terms: Vec<SineTerm>, direction: Direction) -> Self {
        let amplitude_max = terms.iter().map(|t| t.amplitude).fold(0.0, f64::max);
        Self {
            terms,
            direction,
            amplitude_max,
        }
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        if self.terms.is_empty() {
            return Err(PerturbError::InvalidParams("at least one sine term".into()));
        }
        let finite = self
            .terms
            .iter()
            .all(|t| t.amplitude.is_finite() && t.angular_frequency.is_finite() && t.phase.is_finite());
        if !finite || self.amplitude_max.is_nan() {
            return Err(PerturbError::InvalidParams("non-finite sine term".into()));
        }
        if self
            .terms
            .iter()
            .any(|t| t.amplitude < 0.0 || t.amplitude > self.amplitude_max)
        {
            return Err(PerturbError::InvalidParams(format!(
                "amplitudes must lie in [0, {}]",
                self.amplitude_max
            )));
        }
        Ok(())
    }

    /// Signed offset `e(t)`.
    pub fn offset(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.value(t)).sum()
    }
}

/// Shared parameter grid `t_k = k / (samples − 1)` and its time axis
/// `t_k · horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub samples: usize,
    pub horizon: f64,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            horizon: DEFAULT_HORIZON,
        }
    }
}

impl ParamGrid {
    pub fn validate(&self) -> Result<(), PerturbError> {
        if self.samples < 4 {
            return Err(PerturbError::InvalidParams("samples must be >= 4".into()));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(PerturbError::InvalidParams("horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples).map(|k| k as f64 / last).collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.params().into_iter().map(|t| t * self.horizon).collect()
    }
}

/// Monitored signals of one variant, on a shared time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTrace {
    pub e1: SampledSignal,
    pub d1: SampledSignal,
}

impl PerturbationTrace {
    pub fn to_trace(&self) -> Trace {
        Trace::new([self.e1.clone(), self.d1.clone()]).expect("e1 and d1 share one time axis by construction")
    }
}

fn direction_at(base: &Spline2D, t: f64, direction: Direction) -> Point2 {
    match direction {
        Direction::FixedAxisY => Point2::new(0.0, 1.0),
        Direction::Normal => {
            let d = base.derivative(t).expect("grid parameter in [0, 1]");
            let len = d.norm();
            if len > 1e-12 {
                d.perp() * (1.0 / len)
            } else {
                Point2::new(0.0, 1.0)
            }
        }
    }
}

/// Offsets `grid.samples` points of `base` by the sinusoid and refits them at
/// the same parameters with the base's control point count. Returns the
/// variant and its `e1` signal.
pub fn perturb_spline(
    base: &Spline2D,
    params: &SinusoidParams,
    grid: &ParamGrid,
) -> Result<(Spline2D, SampledSignal), PerturbError> {
    params.validate()?;
    grid.validate()?;
    let ts = grid.params();
    let offsets: Vec<f64> = ts.iter().map(|&t| params.offset(t)).collect();
    let points: Vec<Point2> = ts
        .iter()
        .zip(&offsets)
        .map(|(&t, &e)| base.eval(t).expect("grid parameter in [0, 1]") + direction_at(base, t, params.direction) * e)
        .collect();
    let fit = fit_spline_with(&points, base.len(), Parameterization::Explicit(ts))?;
    let variant = Spline2D::new(fit.spline.control_points().to_vec(), base.is_closed())?;
    let e1 = SampledSignal::new(E1, grid.timestamps(), offsets.iter().map(|e| e.abs()).collect())?;
    Ok((variant, e1))
}

/// Pairs `e1` with `d1 = ‖reference(t_k) − variant(t_k)‖` on the same grid.
pub fn build_trace(
    reference: &Spline2D,
    variant: &Spline2D,
    e1: &SampledSignal,
) -> Result<PerturbationTrace, PerturbError> {
    let d1 = pointwise_distance_signal(reference, variant, e1.len())?
        .with_timestamps(e1.timestamps().to_vec())?
        .renamed(D1);
    Ok(PerturbationTrace { e1: e1.clone(), d1 })
}

/// `d_∞(base, variant)` on a `samples`-point grid.
pub fn max_deviation(base: &Spline2D, variant: &Spline2D, samples: usize) -> Result<f64, PerturbError> {
    Ok(distance_lp(base, variant, CurveMetricParams::sup(samples))?)
}

/// Closed interval for uniform sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn validate(&self, what: &str) -> Result<(), PerturbError> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(PerturbError::InvalidParams(format!(
                "{what} range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        Uniform::new_inclusive(self.min, self.max).sample(rng)
    }
}

/// Ranges from which each attempt draws its sinusoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges {
    pub terms: usize,
    pub amplitude: Range,
    pub angular_frequency: Range,
    pub phase: Range,
    #[serde(default)]
    pub direction: Direction,
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            terms: 1,
            amplitude: Range::new(0.0, 5.0),
            angular_frequency: Range::new(2.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI),
            phase: Range::new(0.0, 2.0 * std::f64::consts::PI),
            direction: Direction::Normal,
        }
    }
}

impl SamplingRanges {
    pub fn validate(&self) -> Result<(), PerturbError> {
        if self.terms == 0 {
            return Err(PerturbError::InvalidParams("terms must be >= 1".into()));
        }
        self.amplitude.validate("amplitude")?;
        if self.amplitude.min < 0.0 {
            return Err(PerturbError::InvalidParams("amplitudes must be >= 0".into()));
        }
        self.angular_frequency.validate("angular_frequency")?;
        self.phase.validate("phase")
    }

    /// Parameters for attempt `attempt`, drawn from the stream `(seed, attempt)`.
    pub fn draw(&self, seed: u64, attempt: u64) -> SinusoidParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let terms = (0..self.terms)
            .map(|_| SineTerm {
                amplitude: self.amplitude.sample(&mut rng),
                angular_frequency: self.angular_frequency.sample(&mut rng),
                phase: self.phase.sample(&mut rng),
            })
            .collect();
        SinusoidParams {
            terms,
            direction: self.direction,
            amplitude_max: self.amplitude.max,
        }
    }
}

/// What `d1` measures the variant against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceReference {
    #[default]
    Base,
    /// The most recently accepted variant, or the base before any acceptance.
    PreviousAccepted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VariantOptions {
    pub grid: ParamGrid,
    pub reference: DistanceReference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub attempt: usize,
    pub params: SinusoidParams,
    pub spline: Spline2D,
    pub trace: PerturbationTrace,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantBatch {
    pub base: Spline2D,
    pub accepted: Vec<Variant>,
    pub rejected_count: usize,
    pub seed: u64,
    pub options: VariantOptions,
}

impl VariantBatch {
    pub fn attempts(&self) -> usize {
        self.accepted.len() + self.rejected_count
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts() == 0 {
            0.0
        } else {
            self.accepted.len() as f64 / self.attempts() as f64
        }
    }
}

/// Rejection sampling: draw sinusoids, monitor `spec` on each variant's
/// `e1`/`d1` trace, keep satisfied ones until `n` are accepted.
pub fn generate_variants(
    base: &Spline2D,
    spec: &StlFormula,
    n: usize,
    ranges: &SamplingRanges,
    seed: u64,
    max_attempts: usize,
    options: VariantOptions,
) -> Result<VariantBatch, PerturbError> {
    if n == 0 || max_attempts < n {
        return Err(PerturbError::InvalidParams(format!(
            "need 1 <= n <= max_attempts, got n = {n}, max_attempts = {max_attempts}"
        )));
    }
    ranges.validate()?;
    options.grid.validate()?;
    if let Some(name) = spec.signals().into_iter().find(|s| *s != E1 && *s != D1) {
        return Err(StlError::UnboundSignal(name.to_owned()).into());
    }

    let mut accepted: Vec<Variant> = Vec::with_capacity(n);
    let mut rejected_count = 0;
    for attempt in 0..max_attempts {
        if accepted.len() == n {
            break;
        }
        let params = ranges.draw(seed, attempt as u64);
        let (spline, e1) = perturb_spline(base, &params, &options.grid)?;
        let reference = match (options.reference, accepted.last()) {
            (DistanceReference::PreviousAccepted, Some(prev)) => &prev.spline,
            _ => base,
        };
        let trace = build_trace(reference, &spline, &e1)?;
        let verdict = monitor(spec, &trace.to_trace())?;
        if verdict.satisfied {
            accepted.push(Variant {
                attempt,
                params,
                spline,
                trace,
                verdict,
            });
        } else {
            rejected_count += 1;
        }
    }

    if accepted.len() < n {
        let attempts = accepted.len() + rejected_count;
        return Err(PerturbError::BudgetExhausted {
            requested: n,
            accepted: accepted.len(),
            attempts,
            acceptance_rate: accepted.len() as f64 / attempts as f64,
        });
    }
    Ok(VariantBatch {
        base: base.clone(),
        accepted,
        rejected_count,
        seed,
        options,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    /// `e1`/`d1` trace the variant was accepted on.
    pub trace_file: String,
    pub attempt: usize,
    pub robustness: f64,
    pub max_deviation: f64,
    pub terms: Vec<SineTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub seed: u64,
    pub spec: String,
    pub requested: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub attempts: usize,
    pub acceptance_rate: f64,
    pub samples: usize,
    pub horizon: f64,
    pub reference: DistanceReference,
    pub variants: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn variant_file_name(index: usize) -> String {
    format!("variant_{index:03}.json")
}

pub fn trace_file_name(index: usize) -> String {
    format!("variant_{index:03}.trace.json")
}

impl BatchManifest {
    pub fn from_batch(batch: &VariantBatch, spec_text: &str) -> Result<Self, PerturbError> {
        let samples = batch.options.grid.samples;
        let variants = batch
            .accepted
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Ok(ManifestEntry {
                    file: variant_file_name(i),
                    trace_file: trace_file_name(i),
                    attempt: v.attempt,
                    robustness: v.verdict.robustness,
                    max_deviation: max_deviation(&batch.base, &v.spline, samples)?,
                    terms: v.params.terms.clone(),
                })
            })
            .collect::<Result<Vec<_>, PerturbError>>()?;
        Ok(Self {
            seed: batch.seed,
            spec: spec_text.to_owned(),
            requested: batch.accepted.len(),
            accepted: batch.accepted.len(),
            rejected: batch.rejected_count,
            attempts: batch.attempts(),
            acceptance_rate: batch.acceptance_rate(),
            samples,
            horizon: batch.options.grid.horizon,
            reference: batch.options.reference,
            variants,
        })
    }
}

/// Writes each accepted variant as a spline file and a trace file, plus
/// `manifest.json`, into `dir`, which appears atomically and fully populated.
pub fn write_batch(batch: &VariantBatch, spec_text: &str, dir: &Path) -> Result<BatchManifest, PerturbError> {
    let manifest = BatchManifest::from_batch(batch, spec_text)?;
    fsutil::write_dir_atomic(dir, |tmp| {
        for (i, v) in batch.accepted.iter().enumerate() {
            fsutil::write_json(&tmp.join(variant_file_name(i)), &v.spline)?;
            fsutil::write_json(&tmp.join(trace_file_name(i)), &v.trace.to_trace())?;
        }
        fsutil::write_json(&tmp.join(MANIFEST_FILE), &manifest)
    })?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_stl;
    use std::f64::consts::PI;

    /// Straight segment with Greville-placed control points (uniform speed).
    fn straight(n: usize, length: f64) -> Spline2D {
        let segs = (n - 3) as f64;
        let knot = |i: usize| ((i as f64 - 3.0).max(0.0) / segs).min(1.0);
        Spline2D::new(
            (0..n)
                .map(|i| {
                    let g = (knot(i + 1) + knot(i + 2) + knot(i + 3)) / 3.0;
                    Point2::new(length * g, 0.0)
                })
                .collect(),
            false,
        )
        .unwrap()
    }

    fn single(amplitude: f64, w: f64, phase: f64, direction: Direction) -> SinusoidParams {
        SinusoidParams::new(
            vec![SineTerm {
                amplitude,
                angular_frequency: w,
                phase,
            }],
            direction,
        )
    }

    #[test]
    fn zero_amplitude_reproduces_base() {
        let base = Spline2D::new(
            (0..10)
                .map(|i| Point2::new(i as f64 * 4.0, ((i * 3) % 5) as f64))
                .collect(),
            false,
        )
        .unwrap();
        let (variant, e1) =
            perturb_spline(&base, &single(0.0, 7.0, 0.3, Direction::Normal), &ParamGrid::default()).unwrap();
        assert!(e1.values().iter().all(|v| *v == 0.0));
        assert!(max_deviation(&base, &variant, 2048).unwrap() <= 1e-9);
    }

    #[test]
    fn fixed_axis_sine_on_straight_base() {
        let base = straight(16, 100.0);
        let (w, phase) = (2.0 * PI, 0.4);
        let params = single(3.0, w, phase, Direction::FixedAxisY);
        let (variant, _) = perturb_spline(&base, &params, &ParamGrid::default()).unwrap();
        // Analytic oracle: y = 3 sin(w t + phase) at x = 100 t.
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let p = variant.eval(t).unwrap();
            assert!((p.x - 100.0 * t).abs() <= 0.1, "x at {t}: {p:?}");
            assert!((p.y - 3.0 * (w * t + phase).sin()).abs() <= 0.1, "y at {t}: {p:?}");
        }
    }

    #[test]
    fn e1_is_the_absolute_offset() {
        let base = straight(12, 50.0);
        let params = SinusoidParams::new(
            vec![
                SineTerm {
                    amplitude: 2.0,
                    angular_frequency: 5.0,
                    phase: 1.0,
                },
                SineTerm {
                    amplitude: 0.5,
                    angular_frequency: 17.0,
                    phase: -0.2,
                },
            ],
            Direction::Normal,
        );
        let grid = ParamGrid {
            samples: 101,
            horizon: 10.0,
        };
        let (_, e1) = perturb_spline(&base, &params, &grid).unwrap();
        for (k, v) in e1.values().iter().enumerate() {
            let t = k as f64 / 100.0;
            let expected = (2.0 * (5.0 * t + 1.0).sin() + 0.5 * (17.0 * t - 0.2).sin()).abs();
            assert_eq!(*v, expected);
        }
        assert_eq!(e1.timestamps()[100], 10.0);
    }

    #[test]
    fn constant_offset_trace_and_deviation() {
        let base = straight(8, 40.0);
        let shifted = base.translated(Point2::new(0.0, 3.0));
        let e1 = SampledSignal::new(E1, ParamGrid::default().timestamps(), vec![3.0; 256]).unwrap();
        let trace = build_trace(&base, &shifted, &e1).unwrap();
        assert!(trace.d1.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert_eq!(trace.d1.timestamps(), e1.timestamps());
        assert!((max_deviation(&base, &shifted, 1024).unwrap() - 3.0).abs() < 1e-12);
        let same = build_trace(&base, &base, &e1).unwrap();
        assert!(same.d1.values().iter().all(|v| *v == 0.0));
        assert_eq!(max_deviation(&base, &base, 64).unwrap(), 0.0);
    }

    #[test]
    fn small_amplitudes_always_accepted() {
        let base = straight(12, 80.0);
        let spec = parse_stl("G(e1 < 10)").unwrap();
        let ranges = SamplingRanges {
            amplitude: Range::new(0.0, 5.0),
            ..SamplingRanges::default()
        };
        let batch = generate_variants(&base, &spec, 20, &ranges, 7, 20, VariantOptions::default()).unwrap();
        assert_eq!(batch.accepted.len(), 20);
        assert_eq!(batch.rejected_count, 0);
        assert_eq!(batch.acceptance_rate(), 1.0);
    }

    #[test]
    fn large_amplitudes_exhaust_budget() {
        let base = straight(12, 80.0);
        let spec = parse_stl("G(e1 < 10)").unwrap();
        let ranges = SamplingRanges {
            amplitude: Range::new(12.0, 20.0),
            ..SamplingRanges::default()
        };
        match generate_variants(&base, &spec, 5, &ranges, 3, 50, VariantOptions::default()) {
            Err(PerturbError::BudgetExhausted {
                accepted,
                attempts,
                acceptance_rate,
                ..
            }) => {
                assert_eq!(accepted, 0);
                assert_eq!(attempts, 50);
                assert_eq!(acceptance_rate, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_signal_in_spec() {
        let base = straight(6, 10.0);
        let spec = parse_stl("G(speed < 10)").unwrap();
        assert!(matches!(
            generate_variants(
                &base,
                &spec,
                1,
                &SamplingRanges::default(),
                0,
                5,
                VariantOptions::default()
            ),
            Err(PerturbError::Stl(StlError::UnboundSignal(_)))
        ));
    }

    #[test]
    fn draws_depend_only_on_seed_and_attempt() {
        let r = SamplingRanges::default();
        assert_eq!(r.draw(9, 4), r.draw(9, 4));
        assert_ne!(r.draw(9, 4), r.draw(9, 5));
        assert_ne!(r.draw(9, 4), r.draw(10, 4));
    }

    #[test]
    fn batch_directory_layout() {
        let base = straight(10, 60.0);
        let spec_text = "G(d1 < 10)";
        let spec = parse_stl(spec_text).unwrap();
        let batch = generate_variants(
            &base,
            &spec,
            3,
            &SamplingRanges::default(),
            1,
            30,
            VariantOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("variants");
        let manifest = write_batch(&batch, spec_text, &out).unwrap();
        assert_eq!(manifest.variants.len(), 3);
        let loaded: BatchManifest = serde_json::from_slice(&std::fs::read(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(loaded, manifest);
        let v0: Spline2D = serde_json::from_slice(&std::fs::read(out.join("variant_000.json")).unwrap()).unwrap();
        assert_eq!(v0, batch.accepted[0].spline);
    }
}
