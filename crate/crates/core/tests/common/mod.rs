//! Oracles and generators shared by the integration and acceptance tests.
//! The oracles are written from the textbook definitions and share no code
//! with the library's evaluators.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scenegen::geometry::{fit_spline_with, Parameterization, Point2, Spline2D};
use scenegen::imaging::GrayImage;
use scenegen::stl::{Comparator, Interval, StlFormula, Trace};

pub const SIGNALS: [&str; 2] = ["x", "y"];

/// Sample indices `k >= i` whose timestamp lies in `t_i + I` (every `k >= i`
/// when untimed).
fn window(ts: &[f64], i: usize, iv: &Option<Interval>) -> Vec<usize> {
    (i..ts.len())
        .filter(|&k| match iv {
            None => true,
            Some(iv) => ts[k] >= ts[i] + iv.start() && ts[k] <= ts[i] + iv.end(),
        })
        .collect()
}

fn value(trace: &Trace, signal: &str, i: usize) -> f64 {
    trace.values(signal).expect("bound signal")[i]
}

/// Boolean satisfaction `(trace, i) |= phi`, by direct recursion.
pub fn brute_sat(phi: &StlFormula, trace: &Trace, i: usize) -> bool {
    let ts = trace.timestamps();
    match phi {
        StlFormula::True => true,
        StlFormula::Pred(p) => {
            let v = value(trace, &p.signal, i);
            match p.comparator {
                Comparator::Lt => v < p.threshold,
                Comparator::Le => v <= p.threshold,
                Comparator::Gt => v > p.threshold,
                Comparator::Ge => v >= p.threshold,
            }
        }
        StlFormula::Not(a) => !brute_sat(a, trace, i),
        StlFormula::And(a, b) => brute_sat(a, trace, i) && brute_sat(b, trace, i),
        StlFormula::Or(a, b) => brute_sat(a, trace, i) || brute_sat(b, trace, i),
        StlFormula::Eventually(iv, a) => window(ts, i, iv).into_iter().any(|k| brute_sat(a, trace, k)),
        StlFormula::Always(iv, a) => window(ts, i, iv).into_iter().all(|k| brute_sat(a, trace, k)),
        StlFormula::Until(iv, a, b) => window(ts, i, iv)
            .into_iter()
            .any(|k| brute_sat(b, trace, k) && (i..=k).all(|j| brute_sat(a, trace, j))),
    }
}

/// Quantitative semantics by direct recursion; empty `G` windows give
/// `f64::MAX` and empty `F`/`U` windows `-f64::MAX`.
pub fn brute_rho(phi: &StlFormula, trace: &Trace, i: usize) -> f64 {
    let ts = trace.timestamps();
    match phi {
        StlFormula::True => f64::INFINITY,
        StlFormula::Pred(p) => {
            let v = value(trace, &p.signal, i);
            match p.comparator {
                Comparator::Lt | Comparator::Le => p.threshold - v,
                Comparator::Gt | Comparator::Ge => v - p.threshold,
            }
        }
        StlFormula::Not(a) => -brute_rho(a, trace, i),
        StlFormula::And(a, b) => brute_rho(a, trace, i).min(brute_rho(b, trace, i)),
        StlFormula::Or(a, b) => brute_rho(a, trace, i).max(brute_rho(b, trace, i)),
        StlFormula::Eventually(iv, a) => {
            extremum(window(ts, i, iv).into_iter().map(|k| brute_rho(a, trace, k)), true).unwrap_or(-f64::MAX)
        }
        StlFormula::Always(iv, a) => {
            extremum(window(ts, i, iv).into_iter().map(|k| brute_rho(a, trace, k)), false).unwrap_or(f64::MAX)
        }
        StlFormula::Until(iv, a, b) => extremum(
            window(ts, i, iv).into_iter().map(|k| {
                let guard = (i..=k).map(|j| brute_rho(a, trace, j)).fold(f64::INFINITY, f64::min);
                brute_rho(b, trace, k).min(guard)
            }),
            true,
        )
        .unwrap_or(-f64::MAX),
    }
}

/// Max (or min) of a sequence; `None` when it is empty.
fn extremum(values: impl Iterator<Item = f64>, max: bool) -> Option<f64> {
    values.reduce(|a, b| if max { a.max(b) } else { a.min(b) })
}

pub fn random_interval(rng: &mut ChaCha8Rng) -> Option<Interval> {
    if rng.gen_bool(0.25) {
        return None;
    }
    let a = rng.gen_range(0..=6) as f64 * 0.5;
    let b = a + rng.gen_range(0..=8) as f64 * 0.5;
    Some(Interval::new(a, b).unwrap())
}

/// Random formula of depth at most `depth` over the `x`/`y` signals.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> StlFormula {
    if depth <= 1 || rng.gen_bool(0.2) {
        if rng.gen_bool(0.05) {
            return StlFormula::True;
        }
        let cmp = [Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge][rng.gen_range(0..4)];
        let signal = SIGNALS[rng.gen_range(0..2)];
        return StlFormula::pred(signal, cmp, rng.gen_range(-4..=4) as f64);
    }
    let sub = depth - 1;
    match rng.gen_range(0..6) {
        0 => StlFormula::not(random_formula(rng, sub)),
        1 => StlFormula::and(random_formula(rng, sub), random_formula(rng, sub)),
        2 => StlFormula::or(random_formula(rng, sub), random_formula(rng, sub)),
        3 => StlFormula::eventually(random_interval(rng), random_formula(rng, sub)),
        4 => StlFormula::always(random_interval(rng), random_formula(rng, sub)),
        _ => StlFormula::until(random_interval(rng), random_formula(rng, sub), random_formula(rng, sub)),
    }
}

/// Random trace of length `1..=max_len` with small integer values (ties are
/// common) on a strictly increasing, irregular half-unit time axis.
pub fn random_trace(rng: &mut ChaCha8Rng, max_len: usize) -> Trace {
    let len = rng.gen_range(1..=max_len);
    let mut t = 0.0;
    let timestamps: Vec<f64> = (0..len)
        .map(|_| {
            let now = t;
            t += [0.5, 1.0, 1.0, 1.0, 2.0][rng.gen_range(0..5)];
            now
        })
        .collect();
    let signals: BTreeMap<String, Vec<f64>> = SIGNALS
        .iter()
        .map(|s| (s.to_string(), (0..len).map(|_| rng.gen_range(-5..=5) as f64).collect()))
        .collect();
    Trace::from_columns(timestamps, signals).unwrap()
}

pub fn unit_trace(columns: &[(&str, &[f64])]) -> Trace {
    let len = columns[0].1.len();
    let timestamps = (0..len).map(|i| i as f64).collect();
    let signals = columns.iter().map(|(n, v)| (n.to_string(), v.to_vec())).collect();
    Trace::from_columns(timestamps, signals).unwrap()
}

/// Points at uniform arc-length spacing along a curve of length `length`
/// whose curvature is `k0 + k1 sin(2π s / length + phase)`.
pub fn curvature_curve(length: f64, k0: f64, k1: f64, phase: f64, points: usize) -> Vec<Point2> {
    let ds = length / (points - 1) as f64;
    let mut heading = 0.0f64;
    let mut p = Point2::new(0.0, 0.0);
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        out.push(p);
        let s = i as f64 * ds;
        let kappa = k0 + k1 * (2.0 * std::f64::consts::PI * s / length + phase).sin();
        // Midpoint step on the heading keeps spacing exact and turning smooth.
        let mid = heading + 0.5 * kappa * ds;
        p = p + Point2::new(mid.cos(), mid.sin()) * ds;
        heading += kappa * ds;
    }
    out
}

/// Random smooth road with bounded curvature, parameterized close to
/// arc length.
pub fn random_road(rng: &mut ChaCha8Rng, n_ctrl: usize) -> Spline2D {
    let length = 100.0;
    let k0 = rng.gen_range(-0.02..=0.02);
    let k1 = rng.gen_range(0.0..=0.03);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let pts = curvature_curve(length, k0, k1, phase, 400);
    fit_spline_with(&pts, n_ctrl, Parameterization::Uniform).unwrap().spline
}

/// Random control polygon in a box; may wiggle and self-intersect.
pub fn random_spline(rng: &mut ChaCha8Rng, n_ctrl: usize, extent: f64) -> Spline2D {
    let pts = (0..n_ctrl)
        .map(|_| Point2::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent)))
        .collect();
    Spline2D::new(pts, false).unwrap()
}

/// White band of half-width `halfwidth` pixels around a gently curving road
/// on black, `width` x `height` pixels.
pub fn road_image(width: usize, height: usize, halfwidth: f64) -> GrayImage {
    let (w, h) = (width as f64, height as f64);
    let centre: Vec<Point2> = (0..=2000)
        .map(|i| {
            let s = i as f64 / 2000.0;
            let x = 0.12 * w + 0.76 * w * s;
            let y = 0.5 * h + 0.18 * h * (std::f64::consts::PI * (1.3 * s + 0.1)).sin();
            Point2::new(x, y)
        })
        .collect();
    GrayImage::from_fn(width, height, |x, y| {
        let p = Point2::new(x as f64, y as f64);
        let d = centre.iter().map(|c| c.distance(&p)).fold(f64::INFINITY, f64::min);
        if d <= halfwidth {
            255
        } else {
            0
        }
    })
    .unwrap()
}
