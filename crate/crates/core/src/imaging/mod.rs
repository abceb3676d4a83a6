//! Grayscale preprocessing, thresholding, contour extraction, and the handoff
//! from traced contours to fitted splines.

mod contour;
mod filter;
mod raster;

pub use contour::{centerline, contour_to_spline, fill_contour, trace_contour, Contour};
pub use filter::{gaussian_kernel, preprocess, threshold, PreprocessParams};
pub use raster::{encode_mask_ppm, encode_pgm, load_image, save_pgm, BinaryMask, GrayImage};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image dimensions {width}x{height} do not match {len} samples")]
    BadDimensions { width: usize, height: usize, len: usize },
    #[error("invalid preprocessing parameters: {0}")]
    InvalidParams(String),
    #[error("mask has no foreground pixel")]
    EmptyMask,
    #[error("too few contour points after subsampling: got {got}, need {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("cannot decode image {path}: {reason}")]
    Decode { path: String, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
