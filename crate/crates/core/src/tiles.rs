//! Spline rasterization and 4-neighbor autotile coding.
//!
//! A road cell's code is a bitmask of which 4-neighbors are also road:
//! north = 1, east = 2, south = 4, west = 8. The sixteen codes cover end caps,
//! straights, corners, tees and crossings. Cell `(x, y)` has its center at
//! `(x, y)` in grid coordinates; `y` grows downwards like image rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Spline2D};
use crate::imaging::BinaryMask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TilesError {
    #[error("spline has zero length")]
    DegenerateSpline,
    #[error("grid {width}x{height} leaves no room for a road of half-width {halfwidth}")]
    GridTooSmall {
        width: usize,
        height: usize,
        halfwidth: f64,
    },
    #[error("invalid raster parameters: {0}")]
    InvalidParams(String),
    #[error("cell ({x}, {y}) is not a road cell")]
    NotRoadCell { x: usize, y: usize },
    #[error("cell ({x}, {y}) outside {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid tile grid: {0}")]
    InvalidGrid(String),
}

pub const NORTH: u8 = 1;
pub const EAST: u8 = 2;
pub const SOUTH: u8 = 4;
pub const WEST: u8 = 8;

/// Neighborhood code in `0..=15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileCode(u8);

impl TileCode {
    pub fn new(code: u8) -> Option<Self> {
        (code <= 15).then_some(Self(code))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }
}

/// Grid of tile codes; `None` is an empty (non-road) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TileGridFile", into = "TileGridFile")]
pub struct TileGrid {
    width: usize,
    height: usize,
    cells: Vec<Option<TileCode>>,
}

/// On-disk form: empty cells are `-1`.
#[derive(Serialize, Deserialize)]
struct TileGridFile {
    width: usize,
    height: usize,
    cells: Vec<i64>,
}

pub const EMPTY_CODE: i64 = -1;

impl TryFrom<TileGridFile> for TileGrid {
    type Error = TilesError;

    fn try_from(file: TileGridFile) -> Result<Self, TilesError> {
        let cells = file
            .cells
            .iter()
            .map(|&c| match c {
                EMPTY_CODE => Ok(None),
                0..=15 => Ok(TileCode::new(c as u8)),
                _ => Err(TilesError::InvalidGrid(format!("cell code {c} out of range"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        TileGrid::new(file.width, file.height, cells)
    }
}

impl From<TileGrid> for TileGridFile {
    fn from(g: TileGrid) -> Self {
        TileGridFile {
            width: g.width,
            height: g.height,
            cells: g.cells.iter().map(|c| c.map_or(EMPTY_CODE, |c| c.0 as i64)).collect(),
        }
    }
}

impl TileGrid {
    pub fn new(width: usize, height: usize, cells: Vec<Option<TileCode>>) -> Result<Self, TilesError> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(TilesError::InvalidGrid(format!(
                "{width}x{height} grid with {} cells",
                cells.len()
            )));
        }
        Ok(Self { width, height, cells })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, TilesError> {
        Self::new(width, height, vec![None; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[Option<TileCode>] {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> Option<TileCode> {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, code: Option<TileCode>) -> Result<(), TilesError> {
        if x >= self.width || y >= self.height {
            return Err(TilesError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        self.cells[y * self.width + x] = code;
        Ok(())
    }

    /// Road cells in row-major order.
    pub fn road_cells(&self) -> impl Iterator<Item = (usize, usize, TileCode)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (i % self.width, i / self.width, c)))
    }

    pub fn road_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask::new(
            self.width,
            self.height,
            self.cells.iter().map(Option::is_some).collect(),
        )
        .expect("grid dimensions are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterParams {
    pub grid_width: usize,
    pub grid_height: usize,
    /// Cells whose center lies within this distance of the curve are road.
    pub road_halfwidth: f64,
    /// Initial curve sampling density; raised until samples are < 0.25 cell apart.
    pub samples: usize,
}

impl Default for RasterParams {
    fn default() -> Self {
        Self {
            grid_width: 64,
            grid_height: 64,
            road_halfwidth: 0.5,
            samples: 512,
        }
    }
}

impl RasterParams {
    pub fn validate(&self) -> Result<(), TilesError> {
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(TilesError::InvalidParams("grid dimensions must be positive".into()));
        }
        if !self.road_halfwidth.is_finite() || self.road_halfwidth < 0.0 {
            return Err(TilesError::InvalidParams("road_halfwidth must be >= 0".into()));
        }
        if self.samples < 2 {
            return Err(TilesError::InvalidParams("samples must be >= 2".into()));
        }
        Ok(())
    }

    fn margin(&self) -> f64 {
        self.road_halfwidth.ceil() + 1.0
    }
}

/// Uniform scale plus offset from spline coordinates to grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTransform {
    pub scale: f64,
    pub offset: Point2,
}

impl GridTransform {
    pub fn apply(&self, p: Point2) -> Point2 {
        p * self.scale + self.offset
    }

    pub fn apply_spline(&self, spline: &Spline2D) -> Spline2D {
        spline
            .map_points(|p| self.apply(p))
            .expect("affine image of a valid spline")
    }

    /// Fits the bounding box of `points` into the grid, centered, aspect ratio
    /// preserved, leaving a margin of `ceil(halfwidth) + 1` cells.
    fn fit(points: &[Point2], params: &RasterParams) -> Result<Self, TilesError> {
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let margin = params.margin();
        let avail_w = (params.grid_width as f64 - 1.0) - 2.0 * margin;
        let avail_h = (params.grid_height as f64 - 1.0) - 2.0 * margin;
        if avail_w <= 0.0 || avail_h <= 0.0 {
            return Err(TilesError::GridTooSmall {
                width: params.grid_width,
                height: params.grid_height,
                halfwidth: params.road_halfwidth,
            });
        }
        let (bw, bh) = (hi.x - lo.x, hi.y - lo.y);
        let sx = if bw > 0.0 { avail_w / bw } else { f64::INFINITY };
        let sy = if bh > 0.0 { avail_h / bh } else { f64::INFINITY };
        let scale = sx.min(sy);
        if !scale.is_finite() {
            return Err(TilesError::DegenerateSpline);
        }
        let grid_center = Point2::new(
            (params.grid_width as f64 - 1.0) / 2.0,
            (params.grid_height as f64 - 1.0) / 2.0,
        );
        let box_center = lo.lerp(&hi, 0.5);
        Ok(Self {
            scale,
            offset: grid_center - box_center * scale,
        })
    }
}

const MAX_SPACING: f64 = 0.25;
const MAX_SAMPLES: usize = 1 << 22;

/// Marks every cell the curve passes through (4-connected) and every cell whose
/// center lies within `road_halfwidth` of a curve sample.
pub fn rasterize(spline: &Spline2D, params: &RasterParams) -> Result<BinaryMask, TilesError> {
    rasterize_with_transform(spline, params).map(|(mask, _)| mask)
}

pub fn rasterize_with_transform(
    spline: &Spline2D,
    params: &RasterParams,
) -> Result<(BinaryMask, GridTransform), TilesError> {
    params.validate()?;
    let mut samples = params.samples;
    let (transform, pts) = loop {
        let raw = spline.sample_uniform(samples);
        let length: f64 = raw.windows(2).map(|w| w[0].distance(&w[1])).sum();
        if length == 0.0 {
            return Err(TilesError::DegenerateSpline);
        }
        let transform = GridTransform::fit(&raw, params)?;
        let pts: Vec<Point2> = raw.into_iter().map(|p| transform.apply(p)).collect();
        let spacing = pts.windows(2).map(|w| w[0].distance(&w[1])).fold(0.0, f64::max);
        if spacing < MAX_SPACING || samples >= MAX_SAMPLES {
            assert!(spacing < 0.5, "curve sampling too coarse: spacing {spacing}");
            break (transform, pts);
        }
        samples *= 2;
    };

    let (w, h) = (params.grid_width, params.grid_height);
    let mut mask = BinaryMask::empty(w, h).expect("validated dimensions");
    let mut mark = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            mask.set(x as usize, y as usize, true);
        }
    };

    let cell = |p: &Point2| (p.x.round() as i64, p.y.round() as i64);
    let mut prev: Option<((i64, i64), Point2)> = None;
    for p in &pts {
        let c = cell(p);
        mark(c.0, c.1);
        if let Some((pc, pp)) = prev {
            let (dx, dy) = (c.0 - pc.0, c.1 - pc.1);
            if dx != 0 && dy != 0 {
                // Diagonal step: add the connector closer to the curve.
                let mid = pp.lerp(p, 0.5);
                let a = (pc.0 + dx, pc.1);
                let b = (pc.0, pc.1 + dy);
                let da = mid.distance(&Point2::new(a.0 as f64, a.1 as f64));
                let db = mid.distance(&Point2::new(b.0 as f64, b.1 as f64));
                let pick = if da <= db { a } else { b };
                mark(pick.0, pick.1);
            }
        }
        prev = Some((c, *p));
    }

    let hw = params.road_halfwidth;
    if hw > 0.0 {
        for p in &pts {
            let (x0, x1) = ((p.x - hw).ceil() as i64, (p.x + hw).floor() as i64);
            let (y0, y1) = ((p.y - hw).ceil() as i64, (p.y + hw).floor() as i64);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if p.distance(&Point2::new(x as f64, y as f64)) <= hw {
                        mark(x, y);
                    }
                }
            }
        }
    }
    Ok((mask, transform))
}

/// Neighborhood code of a road cell; out-of-grid neighbors count as non-road.
pub fn code_neighborhood(mask: &BinaryMask, x: usize, y: usize) -> Result<TileCode, TilesError> {
    if x >= mask.width() || y >= mask.height() {
        return Err(TilesError::OutOfBounds {
            x,
            y,
            width: mask.width(),
            height: mask.height(),
        });
    }
    if !mask.get(x, y) {
        return Err(TilesError::NotRoadCell { x, y });
    }
    let (x, y) = (x as i64, y as i64);
    let mut code = 0;
    for (bit, dx, dy) in [(NORTH, 0, -1), (EAST, 1, 0), (SOUTH, 0, 1), (WEST, -1, 0)] {
        if mask.get_signed(x + dx, y + dy) {
            code |= bit;
        }
    }
    Ok(TileCode(code))
}

pub fn synthesize(mask: &BinaryMask) -> TileGrid {
    let (w, h) = (mask.width(), mask.height());
    let cells = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| code_neighborhood(mask, x, y).ok())
        .collect();
    TileGrid::new(w, h, cells).expect("mask dimensions are valid")
}

/// Whether the road cells form a single 4-connected component.
pub fn is_four_connected(mask: &BinaryMask) -> bool {
    let (w, h) = (mask.width(), mask.height());
    let Some(start) = mask.bits().iter().position(|b| *b) else {
        return true;
    };
    let mut seen = vec![false; w * h];
    seen[start] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let (nx, ny) = (x + dx, y + dy);
            if mask.get_signed(nx, ny) {
                let n = ny as usize * w + nx as usize;
                if !seen[n] {
                    seen[n] = true;
                    reached += 1;
                    stack.push(n);
                }
            }
        }
    }
    reached == mask.count()
}
