use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::raster::BinaryMask;
use super::ImagingError;
use crate::geometry::{fit_closed_spline, fit_spline, Point2, Spline2D};

/// Ordered boundary pixels of one connected component, in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point2>,
    pub closed: bool,
}

/// Clockwise on screen (y grows downwards), starting west.
const MOORE: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];
const WEST: usize = 0;

fn direction_to(from: (i64, i64), to: (i64, i64)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    MOORE
        .iter()
        .position(|m| *m == d)
        .expect("backtrack pixel is a Moore neighbor")
}

struct Component {
    pixels: Vec<(i64, i64)>,
}

/// 8-connected foreground components, each seeded at its first pixel in
/// raster order.
fn components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || seen[y * w + x] {
                continue;
            }
            seen[y * w + x] = true;
            let mut pixels = vec![(x as i64, y as i64)];
            let mut queue = VecDeque::from([(x as i64, y as i64)]);
            while let Some((cx, cy)) = queue.pop_front() {
                for (dx, dy) in MOORE {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if mask.get_signed(nx, ny) && !seen[ny as usize * w + nx as usize] {
                        seen[ny as usize * w + nx as usize] = true;
                        pixels.push((nx, ny));
                        queue.push_back((nx, ny));
                    }
                }
            }
            out.push(Component { pixels });
        }
    }
    out
}

/// One Moore step: scan clockwise from the backtrack neighbor; returns the next
/// boundary pixel and the direction from it to its new backtrack.
fn moore_step(mask: &BinaryMask, p: (i64, i64), backtrack: usize) -> Option<((i64, i64), usize)> {
    (1..=8).find_map(|k| {
        let dir = (backtrack + k) % 8;
        let q = (p.0 + MOORE[dir].0, p.1 + MOORE[dir].1);
        mask.get_signed(q.0, q.1).then(|| {
            let prev = MOORE[(dir + 7) % 8];
            let b = (p.0 + prev.0, p.1 + prev.1);
            (q, direction_to(q, b))
        })
    })
}

fn trace_from(mask: &BinaryMask, start: (i64, i64), size: usize) -> Vec<(i64, i64)> {
    let mut out = vec![start];
    let Some((first, first_back)) = moore_step(mask, start, WEST) else {
        return out;
    };
    let (mut p, mut back) = (first, first_back);
    // Each boundary pixel is entered at most four times.
    let limit = 4 * size + 8;
    while out.len() < limit {
        if p == start {
            match moore_step(mask, p, back) {
                Some((next, _)) if next == first => break,
                _ => {}
            }
        }
        out.push(p);
        (p, back) = moore_step(mask, p, back).expect("traced pixel has a foreground neighbor");
    }
    out
}

/// Moore-neighbor boundary tracing of every 8-connected component, largest
/// component first.
pub fn trace_contour(mask: &BinaryMask) -> Result<Vec<Contour>, ImagingError> {
    let mut comps = components(mask);
    if comps.is_empty() {
        return Err(ImagingError::EmptyMask);
    }
    // Stable sort keeps raster order of seeds among equal sizes.
    comps.sort_by_key(|c| std::cmp::Reverse(c.pixels.len()));
    Ok(comps
        .iter()
        .map(|c| {
            let pts = trace_from(mask, c.pixels[0], c.pixels.len());
            Contour {
                closed: pts.len() >= 3,
                points: pts.into_iter().map(|(x, y)| Point2::new(x as f64, y as f64)).collect(),
            }
        })
        .collect())
}

/// Pixels enclosed by a traced contour (boundary included): everything not
/// reachable from outside its bounding box without crossing a contour pixel.
pub fn fill_contour(contour: &Contour) -> Vec<(i64, i64)> {
    let pts: Vec<(i64, i64)> = contour
        .points
        .iter()
        .map(|p| (p.x.round() as i64, p.y.round() as i64))
        .collect();
    let Some(min_x) = pts.iter().map(|p| p.0).min() else {
        return Vec::new();
    };
    let min_y = pts.iter().map(|p| p.1).min().unwrap_or(0);
    let max_x = pts.iter().map(|p| p.0).max().unwrap_or(0);
    let max_y = pts.iter().map(|p| p.1).max().unwrap_or(0);
    // One-pixel frame so the outside is connected.
    let (ox, oy) = (min_x - 1, min_y - 1);
    let w = (max_x - min_x + 3) as usize;
    let h = (max_y - min_y + 3) as usize;
    let mut wall = vec![false; w * h];
    for (x, y) in &pts {
        wall[(y - oy) as usize * w + (x - ox) as usize] = true;
    }
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    outside[0] = true;
    while let Some((x, y)) = queue.pop_front() {
        let neighbors = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        for (nx, ny) in neighbors {
            if nx < w && ny < h && !wall[ny * w + nx] && !outside[ny * w + nx] {
                outside[ny * w + nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| !outside[y * w + x])
        .map(|(x, y)| (x as i64 + ox, y as i64 + oy))
        .collect()
}

#[derive(PartialEq)]
struct Visit {
    dist: f64,
    idx: usize,
}

impl Eq for Visit {}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Chamfer (1, √2) geodesic distances inside `region` from `source`.
fn geodesic(region: &[bool], w: usize, h: usize, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Visit { dist: 0.0, idx: source });
    while let Some(Visit { dist: d, idx }) = heap.pop() {
        if d > dist[idx] {
            continue;
        }
        let (x, y) = ((idx % w) as i64, (idx / w) as i64);
        for (dx, dy) in MOORE {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let n = ny as usize * w + nx as usize;
            if !region[n] {
                continue;
            }
            let step = if dx != 0 && dy != 0 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            if d + step < dist[n] {
                dist[n] = d + step;
                heap.push(Visit { dist: d + step, idx: n });
            }
        }
    }
    dist
}

/// Index of the largest finite distance (the source itself when isolated).
fn farthest(dist: &[f64], source: usize) -> usize {
    let mut best = source;
    for (i, d) in dist.iter().enumerate() {
        if d.is_finite() && *d > dist[best] {
            best = i;
        }
    }
    best
}

/// Road centerline of the region enclosed by `contour`.
///
/// The two geodesically extreme pixels of the region are taken as the road
/// ends. Pixels are bucketed by unit steps of geodesic distance from one end
/// and each bucket contributes its centroid. Thin buckets at either end (less
/// than half the median cross-section) are end caps and are dropped.
pub fn centerline(contour: &Contour) -> Result<Contour, ImagingError> {
    let pixels = fill_contour(contour);
    if pixels.is_empty() {
        return Err(ImagingError::EmptyMask);
    }
    if pixels.len() <= 2 {
        return Ok(Contour {
            points: pixels.iter().map(|&(x, y)| Point2::new(x as f64, y as f64)).collect(),
            closed: false,
        });
    }
    let min_x = pixels.iter().map(|p| p.0).min().unwrap_or(0);
    let min_y = pixels.iter().map(|p| p.1).min().unwrap_or(0);
    let w = (pixels.iter().map(|p| p.0).max().unwrap_or(0) - min_x + 1) as usize;
    let h = (pixels.iter().map(|p| p.1).max().unwrap_or(0) - min_y + 1) as usize;
    let mut region = vec![false; w * h];
    let local: Vec<usize> = pixels
        .iter()
        .map(|&(x, y)| (y - min_y) as usize * w + (x - min_x) as usize)
        .collect();
    for &i in &local {
        region[i] = true;
    }

    let probe = geodesic(&region, w, h, local[0]);
    let end_a = farthest(&probe, local[0]);
    let from_a = geodesic(&region, w, h, end_a);

    let max_bucket = from_a
        .iter()
        .filter(|d| d.is_finite())
        .fold(0.0f64, |m, d| m.max(*d))
        .floor() as usize;
    let mut sums = vec![(0.0, 0.0, 0usize); max_bucket + 1];
    for &i in &local {
        let d = from_a[i];
        if d.is_finite() {
            let b = &mut sums[d.floor() as usize];
            b.0 += (i % w) as f64;
            b.1 += (i / w) as f64;
            b.2 += 1;
        }
    }
    let buckets: Vec<(Point2, usize)> = sums
        .into_iter()
        .filter(|b| b.2 > 0)
        .map(|(sx, sy, n)| {
            (
                Point2::new(sx / n as f64 + min_x as f64, sy / n as f64 + min_y as f64),
                n,
            )
        })
        .collect();

    let mut counts: Vec<usize> = buckets.iter().map(|b| b.1).collect();
    counts.sort_unstable();
    let median = counts[counts.len() / 2] as f64;
    let thick = |b: &&(Point2, usize)| b.1 as f64 >= 0.5 * median;
    let first = buckets.iter().position(|b| thick(&b)).unwrap_or(0);
    let last = buckets.iter().rposition(|b| thick(&b)).unwrap_or(buckets.len() - 1);

    Ok(Contour {
        points: buckets[first..=last].iter().map(|b| b.0).collect(),
        closed: false,
    })
}

/// Fits a spline through every `stride`-th contour point (the last point is
/// always kept). Closed contours produce closed splines.
pub fn contour_to_spline(contour: &Contour, n_ctrl: usize, stride: usize) -> Result<Spline2D, ImagingError> {
    let stride = stride.max(1);
    let mut pts: Vec<Point2> = contour.points.iter().step_by(stride).copied().collect();
    if let Some(last) = contour.points.last() {
        if !(contour.points.len() - 1).is_multiple_of(stride) {
            pts.push(*last);
        }
    }
    if pts.len() < n_ctrl {
        return Err(ImagingError::TooFewPoints {
            got: pts.len(),
            need: n_ctrl,
        });
    }
    let fit = if contour.closed {
        fit_closed_spline(&pts, n_ctrl)?
    } else {
        fit_spline(&pts, n_ctrl)?
    };
    Ok(fit.spline)
}
