//! Point-supervised multiscale crowd counting and localization.
//!
//! The pipeline turns head-point annotations into integer count maps at four
//! scales, trains a three-branch convolutional network with a learnable
//! fusion head against those maps, extracts head detections from the
//! half-resolution branch with connected components, and scores everything
//! with the usual counting (MAE / RMSE) and localization (AP) metrics.

mod error;

pub mod cli;
pub mod evalkit;
pub mod localize;
pub mod model;
pub mod scalemap;
pub mod scene;
pub mod tensornet;

pub use error::{Error, Result};
