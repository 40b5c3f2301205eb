//! Toolkit for evaluating generated landscapes against targets.
//!
//! - [`raster`]: the `RasterStack` data model and the LSCP file format
//! - [`synth`]: deterministic synthetic world of (conditions, imagery) pairs
//! - [`splits`]: random, distance-buffered and regional-holdout designs
//! - [`segmentation`]: K-means land-cover segmentation
//! - [`patches`] and [`metrics`]: connected patches and landscape metrics
//! - [`stats`]: biweight midcorrelation and correlation tables
//! - [`mlp`]: per-pixel fully connected baseline
//! - [`harness`]: experiments, evaluation of generator outputs, sweeps, reports

pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mlp;
pub mod patches;
pub mod raster;
pub mod rng;
pub mod segmentation;
pub mod splits;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{RasterStack, Sample};
