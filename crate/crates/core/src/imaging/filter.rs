use super::raster::{BinaryMask, GrayImage};
use super::ImagingError;

/// Parameters of the preprocessing chain, applied as
/// contrast → brightness → unsharp mask → Gaussian blur.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PreprocessParams {
    pub brightness_offset: f64,
    /// Gain about mid-gray 128.
    pub contrast_gain: f64,
    /// Unsharp-mask weight against a σ = 1 blur.
    pub sharpness_amount: f64,
    pub blur_sigma: f64,
    pub threshold: u8,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            brightness_offset: 0.0,
            contrast_gain: 1.0,
            sharpness_amount: 0.0,
            blur_sigma: 0.0,
            threshold: 128,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let ok = self.brightness_offset.is_finite()
            && self.contrast_gain.is_finite()
            && self.contrast_gain > 0.0
            && self.sharpness_amount.is_finite()
            && self.sharpness_amount >= 0.0
            && self.blur_sigma.is_finite()
            && self.blur_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ImagingError::InvalidParams(format!("{self:?}")))
        }
    }
}

const SHARPEN_SIGMA: f64 = 1.0;

struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn map(mut self, f: impl Fn(f64) -> f64) -> Plane {
        for v in &mut self.data {
            *v = f(*v).clamp(0.0, 255.0);
        }
        self
    }
}

pub fn preprocess(img: &GrayImage, params: &PreprocessParams) -> Result<GrayImage, ImagingError> {
    params.validate()?;
    let mut plane = Plane {
        width: img.width(),
        height: img.height(),
        data: img.pixels().iter().map(|&p| p as f64).collect(),
    };
    let gain = params.contrast_gain;
    plane = plane.map(|p| 128.0 + gain * (p - 128.0));
    let offset = params.brightness_offset;
    plane = plane.map(|p| p + offset);
    if params.sharpness_amount > 0.0 {
        let smooth = gaussian_blur(&plane.data, plane.width, plane.height, SHARPEN_SIGMA);
        let amount = params.sharpness_amount;
        for (p, s) in plane.data.iter_mut().zip(smooth) {
            *p = (*p + amount * (*p - s)).clamp(0.0, 255.0);
        }
    }
    if params.blur_sigma > 0.0 {
        plane.data = gaussian_blur(&plane.data, plane.width, plane.height, params.blur_sigma);
        plane = plane.map(|p| p);
    }
    GrayImage::new(
        plane.width,
        plane.height,
        plane.data.iter().map(|v| v.round() as u8).collect(),
    )
}

/// Normalized 1D Gaussian truncated at `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Mirror index into `[0, len)` without repeating the edge sample.
fn reflect(mut i: i64, len: usize) -> usize {
    let n = len as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

fn gaussian_blur(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[reflect(x as i64 + k as i64 - radius, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for x in 0..width {
        for y in 0..height {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect(y as i64 + k as i64 - radius, height) * width + x])
                .sum();
        }
    }
    out
}

/// `true` where intensity is at least `level`.
pub fn threshold(img: &GrayImage, level: u8) -> BinaryMask {
    BinaryMask::new(
        img.width(),
        img.height(),
        img.pixels().iter().map(|&p| p >= level).collect(),
    )
    .expect("dimensions carried over from a valid image")
}
