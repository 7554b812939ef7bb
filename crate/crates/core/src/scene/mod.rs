//! Scenes: an image plus the head points annotated on it.
//!
//! Coordinates are 0-indexed pixels with real values; pixel `i` covers
//! `[i, i + 1)`. Both dimensions must be positive multiples of 16 so every
//! scale down to 1/16 is integral.

mod augment;
mod io;
mod netpbm;
mod synth;

pub use augment::{augment, AugmentOp};
pub use io::{load_dataset, load_scene, save_dataset, save_scene, Dataset, ImageStorage, Manifest};
pub use synth::{synth_scene, synth_scene_with, SynthParams, MIN_HEAD_SEPARATION};

use crate::error::{invalid, Result};
use crate::tensornet::Tensor;
use crate::Error;

/// Scene dimensions must be multiples of this.
pub const DIM_QUANTUM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeadPoint {
    pub x: f64,
    pub y: f64,
}

impl HeadPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        HeadPoint { x, y }
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        ((self.x - x).powi(2) + (self.y - y).powi(2)).sqrt()
    }
}

/// A validated, immutable scene.
#[derive(Debug, Clone, PartialEq)]
pub struct CrowdScene {
    id: String,
    image: Tensor,
    heads: Vec<HeadPoint>,
}

pub(crate) fn check_dims(width: usize, height: usize) -> Result<()> {
    for (name, d) in [("width", width), ("height", height)] {
        if d < DIM_QUANTUM || d % DIM_QUANTUM != 0 {
            return Err(invalid!("{name} {d} must be a positive multiple of {DIM_QUANTUM}"));
        }
    }
    Ok(())
}

impl CrowdScene {
    pub fn new(id: impl Into<String>, image: Tensor, heads: Vec<HeadPoint>) -> Result<Self> {
        let id = id.into();
        let shape = image.shape();
        check_dims(shape.width, shape.height)?;
        if shape.channels == 0 {
            return Err(invalid!("scene {id}: image has no channels"));
        }
        if !image.all_finite() {
            return Err(Error::NonFinite(format!("image of scene {id}")));
        }
        let (w, h) = (shape.width as f64, shape.height as f64);
        for (i, p) in heads.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::NonFinite(format!("head {i} of scene {id}")));
            }
            if !(0.0..w).contains(&p.x) || !(0.0..h).contains(&p.y) {
                return Err(invalid!(
                    "scene {id}: head {i} at ({}, {}) outside [0,{w})x[0,{h})",
                    p.x,
                    p.y
                ));
            }
        }
        Ok(CrowdScene { id, image, heads })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> usize {
        self.image.shape().width
    }

    pub fn height(&self) -> usize {
        self.image.shape().height
    }

    pub fn image(&self) -> &Tensor {
        &self.image
    }

    pub fn heads(&self) -> &[HeadPoint] {
        &self.heads
    }

    /// Person count M.
    pub fn count(&self) -> usize {
        self.heads.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensornet::Shape;

    #[test]
    fn validation() {
        let img = Tensor::zeros(Shape::new(1, 32, 48));
        assert!(CrowdScene::new("ok", img.clone(), vec![HeadPoint::new(47.99, 0.0)]).is_ok());
        assert!(CrowdScene::new("x", img.clone(), vec![HeadPoint::new(48.0, 1.0)]).is_err());
        assert!(CrowdScene::new("y", img.clone(), vec![HeadPoint::new(1.0, -0.1)]).is_err());
        assert!(CrowdScene::new("n", img, vec![HeadPoint::new(f64::NAN, 1.0)]).is_err());
        assert!(CrowdScene::new("d", Tensor::zeros(Shape::new(1, 40, 32)), vec![]).is_err());
        assert!(CrowdScene::new("e", Tensor::zeros(Shape::new(1, 0, 32)), vec![]).is_err());
    }
}
