use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::imaging::PreprocessParams;
use crate::perturb::{DistanceReference, ParamGrid, SamplingRanges, VariantOptions, DEFAULT_HORIZON, DEFAULT_SAMPLES};
use crate::protocol::Transport;
use crate::stl::{parse_stl, StlFormula};
use crate::tiles::RasterParams;
use crate::{Error, Result};

/// Which curve of the largest blob is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExtractMode {
    /// Medial path between the blob's two farthest ends; suits road bands.
    #[default]
    Centerline,
    /// The closed outer boundary.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub n_ctrl: usize,
    /// Keep every `stride`-th traced point before fitting.
    pub stride: usize,
    pub mode: ExtractMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_ctrl: 12,
            stride: 2,
            mode: ExtractMode::Centerline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    /// STL specification over `e1` and `d1`.
    pub spec: String,
    #[serde(default)]
    pub ranges: SamplingRanges,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub reference: DistanceReference,
}

fn default_n() -> usize {
    10
}

fn default_max_attempts() -> usize {
    1000
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl PerturbConfig {
    pub fn options(&self) -> VariantOptions {
        VariantOptions {
            grid: ParamGrid {
                samples: self.samples,
                horizon: self.horizon,
            },
            reference: self.reference,
        }
    }

    pub fn formula(&self) -> Result<StlFormula> {
        Ok(parse_stl(&self.spec)?)
    }
}

/// End-to-end run description. Relative `image` paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub image: PathBuf,
    #[serde(default)]
    pub preprocess: PreprocessParams,
    #[serde(default)]
    pub fit: FitConfig,
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub raster: RasterParams,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_transport")]
    pub transport: Transport,
    #[serde(default = "default_tile_size")]
    pub tile_size: f64,
}

fn default_transport() -> Transport {
    Transport::Stream
}

fn default_tile_size() -> f64 {
    1.0
}

impl PipelineConfig {
    /// Checks every sub-configuration, including that the spec parses.
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        if self.fit.n_ctrl < 4 {
            return Err(Error::Config(format!("fit.n_ctrl = {} (need >= 4)", self.fit.n_ctrl)));
        }
        if self.fit.stride == 0 {
            return Err(Error::Config("fit.stride must be >= 1".into()));
        }
        self.perturb.formula()?;
        self.perturb.ranges.validate()?;
        self.perturb.options().grid.validate()?;
        if self.perturb.n == 0 || self.perturb.max_attempts < self.perturb.n {
            return Err(Error::Config(format!(
                "need 1 <= perturb.n <= perturb.max_attempts, got {} and {}",
                self.perturb.n, self.perturb.max_attempts
            )));
        }
        self.raster.validate()?;
        if !self.tile_size.is_finite() || self.tile_size <= 0.0 {
            return Err(Error::Config("tile_size must be positive".into()));
        }
        Ok(())
    }
}
