//! Road scenario reconstruction and variation.
//!
//! Images are reduced to road centerline splines ([`imaging`], [`geometry`]),
//! perturbed into variants that are filtered by signal temporal logic
//! specifications ([`perturb`], [`stl`]), coded into autotile grids
//! ([`tiles`]), and streamed to a headless scene server ([`protocol`]).

pub mod cli;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod perturb;
pub mod protocol;
pub mod stl;
pub mod tiles;

mod fsutil;

pub use error::{Error, Result};
