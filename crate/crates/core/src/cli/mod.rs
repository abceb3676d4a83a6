//! `scenegen` command line: one subcommand per pipeline stage plus the
//! end-to-end `pipeline`.

mod commands;
mod config;

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_extract, cmd_monitor, cmd_perturb, cmd_pipeline, cmd_send, cmd_serve, cmd_tiles, extract_spline,
    load_pipeline_config, read_json, read_spec, read_text, run_perturb, verdict_line, Extraction, PipelineOverrides,
    PipelineReport, BASE_SPLINE_FILE, TILES_FILE, VARIANTS_DIR, VARIANT_TILES_DIR,
};
pub use config::{ExtractMode, FitConfig, PerturbConfig, PipelineConfig};

use crate::error::exit;
use crate::imaging::PreprocessParams;
use crate::perturb::{DistanceReference, Range, SamplingRanges, DEFAULT_HORIZON, DEFAULT_SAMPLES};
use crate::protocol::{SendOptions, Transport, DEFAULT_PORT};
use crate::tiles::RasterParams;
use crate::Result;

#[derive(Debug, Parser)]
#[command(
    name = "scenegen",
    version,
    about = "Road scenario extraction, variation and streaming"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a spline to the largest road blob of an image.
    Extract(ExtractArgs),
    /// Generate spec-satisfying sinusoidal variants of a spline.
    Perturb(PerturbArgs),
    /// Check a trace against an STL spec; exits 1 when unsatisfied.
    Monitor(MonitorArgs),
    /// Rasterize a spline into an autotile grid.
    Tiles(TilesArgs),
    /// Send a tile grid to a scene server.
    Send(SendArgs),
    /// Run a headless scene server.
    Serve(ServeArgs),
    /// Run image → spline → variants → tiles → send from a JSON config.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub brightness: f64,
    #[arg(long, default_value_t = 1.0)]
    pub contrast: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sharpness: f64,
    #[arg(long, default_value_t = 0.0)]
    pub blur: f64,
    #[arg(long, default_value_t = 128)]
    pub threshold: u8,
}

impl PreprocessArgs {
    fn params(&self) -> PreprocessParams {
        PreprocessParams {
            brightness_offset: self.brightness,
            contrast_gain: self.contrast,
            sharpness_amount: self.sharpness,
            blur_sigma: self.blur,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    #[arg(long, default_value_t = 12)]
    pub n_ctrl: usize,
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    #[arg(long, value_enum, default_value_t = ExtractMode::Centerline)]
    pub mode: ExtractMode,
    /// Write the thresholded mask as a PPM image.
    #[arg(long)]
    pub dump_ppm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    pub spline: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for variants and manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_attempts: usize,
    /// JSON file with sampling ranges; overrides the range flags below.
    #[arg(long)]
    pub ranges: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub terms: usize,
    #[arg(long, default_value_t = 5.0)]
    pub amplitude_max: f64,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Measure d1 against the previously accepted variant instead of the base.
    #[arg(long)]
    pub chain: bool,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    pub trace: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct RasterArgs {
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 0.5)]
    pub halfwidth: f64,
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct TilesArgs {
    pub spline: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub raster: RasterArgs,
    /// Write the road mask as a PPM image.
    #[arg(long)]
    pub dump_ppm: Option<PathBuf>,
}

fn default_endpoint() -> String {
    format!("127.0.0.1:{DEFAULT_PORT}")
}

#[derive(Debug, Args)]
pub struct SendArgs {
    /// Tile grid JSON (a server dump with agents also works).
    pub grid: PathBuf,
    #[arg(long, default_value_t = default_endpoint())]
    pub endpoint: String,
    #[arg(long, value_enum, default_value_t = Transport::Stream)]
    pub transport: Transport,
    #[arg(long, default_value = "scene")]
    pub scene_id: String,
    #[arg(long, default_value_t = 1.0)]
    pub tile_size: f64,
    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = default_endpoint())]
    pub listen: String,
    #[arg(long, value_enum, default_value_t = Transport::Stream)]
    pub transport: Transport,
    /// Dump file written on every commit.
    #[arg(long)]
    pub out: PathBuf,
    /// Exit after the first successful commit.
    #[arg(long)]
    pub once: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spec file replacing the config's spec text.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, value_enum)]
    pub transport: Option<Transport>,
    /// Directory for mask.ppm and road.ppm.
    #[arg(long)]
    pub dump_ppm: Option<PathBuf>,
}

fn perturb_config(args: &PerturbArgs) -> Result<PerturbConfig> {
    let ranges = match &args.ranges {
        Some(path) => read_json(path)?,
        None => SamplingRanges {
            terms: args.terms,
            amplitude: Range::new(0.0, args.amplitude_max),
            ..SamplingRanges::default()
        },
    };
    let (spec, _) = read_spec(&args.spec)?;
    Ok(PerturbConfig {
        spec,
        ranges,
        n: args.n,
        seed: args.seed,
        max_attempts: args.max_attempts,
        horizon: args.horizon,
        samples: args.samples,
        reference: if args.chain {
            DistanceReference::PreviousAccepted
        } else {
            DistanceReference::Base
        },
    })
}

/// Runs one subcommand, printing its result line; returns the exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Extract(a) => {
            let fit = FitConfig {
                n_ctrl: a.n_ctrl,
                stride: a.stride,
                mode: a.mode,
            };
            let spline = cmd_extract(&a.image, &a.preprocess.params(), &fit, &a.out, a.dump_ppm.as_deref())?;
            println!("wrote {} ({} control points)", a.out.display(), spline.len());
        }
        Command::Perturb(a) => {
            let config = perturb_config(&a)?;
            let manifest = cmd_perturb(&a.spline, &config, &a.out)?;
            println!(
                "accepted {} of {} attempts (rate {:.3}) into {}",
                manifest.accepted,
                manifest.attempts,
                manifest.acceptance_rate,
                a.out.display()
            );
        }
        Command::Monitor(a) => {
            let verdict = cmd_monitor(&a.trace, &a.spec)?;
            println!("{}", verdict_line(&verdict));
            if !verdict.satisfied {
                return Ok(exit::UNSAT);
            }
        }
        Command::Tiles(a) => {
            let raster = RasterParams {
                grid_width: a.raster.width,
                grid_height: a.raster.height,
                road_halfwidth: a.raster.halfwidth,
                samples: a.raster.samples,
            };
            let grid = cmd_tiles(&a.spline, &raster, &a.out, a.dump_ppm.as_deref())?;
            println!("wrote {} ({} road cells)", a.out.display(), grid.road_count());
        }
        Command::Send(a) => {
            let options = SendOptions {
                transport: a.transport,
                timeout: Duration::from_millis(a.timeout_ms),
                tile_size: a.tile_size,
                scene_id: a.scene_id,
            };
            let ack = cmd_send(&a.grid, &a.endpoint, &options)?;
            println!("ack ok: {}", ack.detail);
        }
        Command::Serve(a) => cmd_serve(&a.listen, a.transport, &a.out, a.once)?,
        Command::Pipeline(a) => {
            let overrides = PipelineOverrides {
                seed: a.seed,
                spec: a.spec,
                endpoint: a.endpoint,
                transport: a.transport,
                dump_ppm: a.dump_ppm,
            };
            let report = cmd_pipeline(&a.config, &a.out, &overrides)?;
            println!(
                "{} variants, {} road cells, outputs in {}",
                report.manifest.accepted,
                report.grid.road_count(),
                a.out.display()
            );
            if let Some(ack) = report.ack {
                println!("ack ok: {}", ack.detail);
            }
        }
    }
    Ok(exit::SUCCESS)
}
