use std::net::ToSocketAddrs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{ExtractMode, FitConfig, PerturbConfig, PipelineConfig};
use crate::fsutil;
use crate::geometry::Spline2D;
use crate::imaging::{
    centerline, contour_to_spline, encode_mask_ppm, load_image, preprocess, threshold, trace_contour, BinaryMask,
    Contour, GrayImage, ImagingError, PreprocessParams,
};
use crate::perturb::{generate_variants, write_batch, BatchManifest, VariantBatch};
use crate::protocol::{send_scene, AckSummary, SceneServer, SendOptions, Spawn, Transport};
use crate::stl::{monitor, parse_stl, StlFormula, Trace, Verdict};
use crate::tiles::{rasterize_with_transform, synthesize, GridTransform, RasterParams, TileGrid};
use crate::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_spec(path: &Path) -> Result<(String, StlFormula)> {
    let text = read_text(path)?;
    let formula = parse_stl(&text)?;
    Ok((text, formula))
}

/// Intermediate products of image-to-spline extraction.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub mask: BinaryMask,
    pub contour: Contour,
    pub spline: Spline2D,
}

/// Preprocess, threshold, trace the largest blob and fit its centerline (or
/// boundary).
pub fn extract_spline(img: &GrayImage, params: &PreprocessParams, fit: &FitConfig) -> Result<Extraction> {
    let mask = threshold(&preprocess(img, params)?, params.threshold);
    let contours = trace_contour(&mask)?;
    let largest = contours.into_iter().next().ok_or(ImagingError::EmptyMask)?;
    let contour = match fit.mode {
        ExtractMode::Centerline => centerline(&largest)?,
        ExtractMode::Boundary => largest,
    };
    let spline = contour_to_spline(&contour, fit.n_ctrl, fit.stride)?;
    Ok(Extraction { mask, contour, spline })
}

pub fn cmd_extract(
    image: &Path,
    params: &PreprocessParams,
    fit: &FitConfig,
    out: &Path,
    dump_ppm: Option<&Path>,
) -> Result<Spline2D> {
    params.validate()?;
    let img = load_image(image)?;
    let extraction = extract_spline(&img, params, fit)?;
    if let Some(path) = dump_ppm {
        fsutil::write_atomic(path, &encode_mask_ppm(&extraction.mask))?;
    }
    fsutil::write_json(out, &extraction.spline)?;
    Ok(extraction.spline)
}

pub fn run_perturb(base: &Spline2D, config: &PerturbConfig) -> Result<VariantBatch> {
    let formula = config.formula()?;
    Ok(generate_variants(
        base,
        &formula,
        config.n,
        &config.ranges,
        config.seed,
        config.max_attempts,
        config.options(),
    )?)
}

pub fn cmd_perturb(spline: &Path, config: &PerturbConfig, out_dir: &Path) -> Result<BatchManifest> {
    let base: Spline2D = read_json(spline)?;
    let batch = run_perturb(&base, config)?;
    Ok(write_batch(&batch, &config.spec, out_dir)?)
}

pub fn cmd_monitor(trace: &Path, spec: &Path) -> Result<Verdict> {
    let (_, formula) = read_spec(spec)?;
    let trace: Trace = read_json(trace)?;
    Ok(monitor(&formula, &trace)?)
}

pub fn verdict_line(verdict: &Verdict) -> String {
    let label = if verdict.satisfied { "SAT" } else { "UNSAT" };
    format!("{label} ρ={:.6}", verdict.robustness)
}

pub fn cmd_tiles(spline: &Path, raster: &RasterParams, out: &Path, dump_ppm: Option<&Path>) -> Result<TileGrid> {
    let spline: Spline2D = read_json(spline)?;
    let (mask, _) = rasterize_with_transform(&spline, raster)?;
    let grid = synthesize(&mask);
    if let Some(path) = dump_ppm {
        fsutil::write_atomic(path, &encode_mask_ppm(&mask))?;
    }
    fsutil::write_json(out, &grid)?;
    Ok(grid)
}

/// A tile grid file, optionally carrying agents as in a server dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneFile {
    #[serde(flatten)]
    grid: TileGrid,
    #[serde(default)]
    agents: Vec<Spawn>,
}

pub fn cmd_send(grid: &Path, endpoint: &str, options: &SendOptions) -> Result<AckSummary> {
    let scene: SceneFile = read_json(grid)?;
    Ok(send_scene(&scene.grid, &scene.agents, endpoint, options)?)
}

/// Serves until interrupted, or until the first commit when `once` is set.
pub fn cmd_serve(listen: &str, transport: Transport, dump: &Path, once: bool) -> Result<()> {
    let addrs: Vec<_> = listen
        .to_socket_addrs()
        .map_err(|e| Error::Config(format!("listen address {listen}: {e}")))?
        .collect();
    let server = SceneServer::bind(&addrs[..], transport, dump)?;
    eprintln!("listening on {} ({transport:?})", server.local_addr()?);
    let stop = AtomicBool::new(false);
    if once {
        server.run_until_commit(&stop)?;
    } else {
        server.run(&stop)?;
    }
    Ok(())
}

/// Command-line values that take precedence over the pipeline config.
#[derive(Debug, Clone, Default)]
pub struct PipelineOverrides {
    pub seed: Option<u64>,
    pub spec: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub transport: Option<Transport>,
    pub dump_ppm: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub base: Spline2D,
    pub manifest: BatchManifest,
    pub grid: TileGrid,
    pub ack: Option<AckSummary>,
}

pub const BASE_SPLINE_FILE: &str = "spline.json";
pub const VARIANTS_DIR: &str = "variants";
pub const TILES_FILE: &str = "tiles.json";
pub const VARIANT_TILES_DIR: &str = "variant_tiles";

/// Loads a config, applies overrides, and validates it before any work.
pub fn load_pipeline_config(path: &Path, overrides: &PipelineOverrides) -> Result<PipelineConfig> {
    let mut config: PipelineConfig = read_json(path)?;
    if config.image.is_relative() {
        if let Some(dir) = path.parent() {
            config.image = dir.join(&config.image);
        }
    }
    if let Some(seed) = overrides.seed {
        config.perturb.seed = seed;
    }
    if let Some(spec) = &overrides.spec {
        config.perturb.spec = read_text(spec)?;
    }
    if let Some(endpoint) = &overrides.endpoint {
        config.endpoint = Some(endpoint.clone());
    }
    if let Some(transport) = overrides.transport {
        config.transport = transport;
    }
    config.validate()?;
    Ok(config)
}

/// A car at the start of the road, in world units, heading along it.
fn start_spawn(spline: &Spline2D, transform: &GridTransform, tile_size: f64) -> Result<Spawn> {
    let start = transform.apply(spline.eval(0.0)?);
    let d = spline.derivative(0.0)?;
    Ok(Spawn {
        kind: "car".into(),
        x: start.x * tile_size,
        y: start.y * tile_size,
        heading: d.y.atan2(d.x),
    })
}

/// Image → spline → variants → tiles, written under `out`, then the base
/// scene is sent to the configured endpoint.
pub fn cmd_pipeline(config_path: &Path, out: &Path, overrides: &PipelineOverrides) -> Result<PipelineReport> {
    let config = load_pipeline_config(config_path, overrides)?;
    let img = load_image(&config.image)?;
    let extraction = extract_spline(&img, &config.preprocess, &config.fit)?;
    let base = extraction.spline.clone();
    let batch = run_perturb(&base, &config.perturb)?;
    let (road, transform) = rasterize_with_transform(&base, &config.raster)?;
    let grid = synthesize(&road);
    let variant_grids = batch
        .accepted
        .iter()
        .map(|v| Ok(synthesize(&rasterize_with_transform(&v.spline, &config.raster)?.0)))
        .collect::<Result<Vec<_>>>()?;

    let mut manifest = None;
    fsutil::write_dir_atomic(out, |dir| {
        fsutil::write_json(&dir.join(BASE_SPLINE_FILE), &base)?;
        fsutil::write_json(&dir.join(TILES_FILE), &grid)?;
        let written =
            write_batch(&batch, &config.perturb.spec, &dir.join(VARIANTS_DIR)).map_err(std::io::Error::other)?;
        std::fs::create_dir(dir.join(VARIANT_TILES_DIR))?;
        for (entry, g) in written.variants.iter().zip(&variant_grids) {
            fsutil::write_json(&dir.join(VARIANT_TILES_DIR).join(&entry.file), g)?;
        }
        manifest = Some(written);
        Ok(())
    })?;
    let manifest = manifest.expect("batch written");

    if let Some(dir) = &overrides.dump_ppm {
        std::fs::create_dir_all(dir)?;
        fsutil::write_atomic(&dir.join("mask.ppm"), &encode_mask_ppm(&extraction.mask))?;
        fsutil::write_atomic(&dir.join("road.ppm"), &encode_mask_ppm(&road))?;
    }

    let ack = match &config.endpoint {
        Some(endpoint) => {
            let spawn = start_spawn(&base, &transform, config.tile_size)?;
            let options = SendOptions {
                transport: config.transport,
                tile_size: config.tile_size,
                scene_id: format!("pipeline-{}", config.perturb.seed),
                ..SendOptions::default()
            };
            Some(send_scene(&grid, &[spawn], endpoint, &options)?)
        }
        None => None,
    };
    Ok(PipelineReport {
        base,
        manifest,
        grid,
        ack,
    })
}
