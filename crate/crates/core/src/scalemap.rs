//! Ground-truth count maps at the four working scales.
//!
//! Every head falls into exactly one cell per scale: cell `(r, c)` at a scale
//! with block size `d` covers pixels `[c d, (c + 1) d) x [r d, (r + 1) d)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scene::CrowdScene;
use crate::tensornet::{Shape, Tensor};

/// The four scales. Branch scales S1..S3 are 1/8, 1/4, 1/2; the fused
/// counting output S4 is 1/16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scale {
    S1,
    S2,
    S3,
    S4,
}

impl Scale {
    pub const ALL: [Scale; 4] = [Scale::S1, Scale::S2, Scale::S3, Scale::S4];
    pub const BRANCHES: [Scale; 3] = [Scale::S1, Scale::S2, Scale::S3];

    /// j in 1..=4.
    pub const fn index(self) -> usize {
        match self {
            Scale::S1 => 1,
            Scale::S2 => 2,
            Scale::S3 => 3,
            Scale::S4 => 4,
        }
    }

    pub fn from_index(j: usize) -> Option<Scale> {
        Scale::ALL.get(j.wrapping_sub(1)).copied()
    }

    /// Pixels per cell side, i.e. the inverse of the scale factor.
    pub const fn block(self) -> usize {
        match self {
            Scale::S1 => 8,
            Scale::S2 => 4,
            Scale::S3 => 2,
            Scale::S4 => 16,
        }
    }

    pub fn factor(self) -> f64 {
        1.0 / self.block() as f64
    }

    /// (rows, cols) of a map of this scale for a `width x height` image.
    pub const fn grid_dims(self, width: usize, height: usize) -> (usize, usize) {
        (height / self.block(), width / self.block())
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S{}", self.index())
    }
}

/// Integer head counts per cell at one scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleMap {
    scale: Scale,
    rows: usize,
    cols: usize,
    grid: Vec<u32>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct ScaleMapJson {
    scale: usize,
    grid: Vec<Vec<u32>>,
}

impl ScaleMap {
    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.grid[r * self.cols + c]
    }

    pub fn cells(&self) -> &[u32] {
        &self.grid
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Target tensor of shape 1 x rows x cols.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_fn(Shape::new(1, self.rows, self.cols), |_, r, c| self.get(r, c) as f64)
    }

    /// Sums non-overlapping 2x2 blocks; rows and cols must be even.
    pub fn block_sum_2x2(&self) -> Vec<u32> {
        let (rows, cols) = (self.rows / 2, self.cols / 2);
        let mut out = vec![0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                out[r * cols + c] = self.get(2 * r, 2 * c)
                    + self.get(2 * r, 2 * c + 1)
                    + self.get(2 * r + 1, 2 * c)
                    + self.get(2 * r + 1, 2 * c + 1);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let grid = self.grid.chunks(self.cols.max(1)).map(|r| r.to_vec()).collect();
        serde_json::to_string(&ScaleMapJson {
            scale: self.scale.index(),
            grid,
        })
        .expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<ScaleMap> {
        let j: ScaleMapJson = serde_json::from_str(text).map_err(|e| invalid!("scale map json: {e}"))?;
        let scale = Scale::from_index(j.scale).ok_or_else(|| invalid!("scale index {} not in 1..=4", j.scale))?;
        let rows = j.grid.len();
        let cols = j.grid.first().map_or(0, Vec::len);
        if j.grid.iter().any(|r| r.len() != cols) {
            return Err(invalid!("ragged scale map grid"));
        }
        let grid: Vec<u32> = j.grid.concat();
        let total = grid.iter().map(|&v| v as u64).sum();
        Ok(ScaleMap {
            scale,
            rows,
            cols,
            grid,
            total,
        })
    }
}

/// `(x / W, y / H)` for every head, in order.
pub fn normalize_heads(scene: &CrowdScene) -> Vec<(f64, f64)> {
    let (w, h) = (scene.width() as f64, scene.height() as f64);
    scene.heads().iter().map(|p| (p.x / w, p.y / h)).collect()
}

/// Counts heads per cell: a head lands in `(floor(v H f), floor(u W f))` for
/// normalized coordinates `(u, v)` and scale factor `f`.
pub fn bin_annotations(scene: &CrowdScene, scale: Scale) -> ScaleMap {
    let (rows, cols) = scale.grid_dims(scene.width(), scene.height());
    let mut grid = vec![0u32; rows * cols];
    let (w, h) = (scene.width() as f64, scene.height() as f64);
    let f = scale.factor();
    for (u, v) in normalize_heads(scene) {
        // u*W reproduces x exactly for power-of-two widths; clamp guards the
        // last ulp for others
        let c = ((u * w * f).floor() as usize).min(cols - 1);
        let r = ((v * h * f).floor() as usize).min(rows - 1);
        grid[r * cols + c] += 1;
    }
    ScaleMap {
        scale,
        rows,
        cols,
        grid,
        total: scene.count() as u64,
    }
}

/// The four targets D1..D4 in [`Scale::ALL`] order.
pub fn bin_all(scene: &CrowdScene) -> [ScaleMap; 4] {
    Scale::ALL.map(|s| bin_annotations(scene, s))
}
