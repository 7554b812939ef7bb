use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, CrowdScene, HeadPoint, DIM_QUANTUM};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentOp {
    HFlip,
    Crop { x0: usize, y0: usize, width: usize, height: usize },
    /// A crop of the given size at a seeded, 16-aligned position.
    RandomCrop { width: usize, height: usize },
}

/// Applies `op`, returning a new scene. `rng_seed` only matters for
/// [`AugmentOp::RandomCrop`].
///
/// Flipping uses the pixel-index reflection `x -> W - 1 - x`; heads in the
/// last sub-pixel column (`x > W - 1`) land on 0.
pub fn augment(scene: &CrowdScene, op: AugmentOp, rng_seed: u64) -> Result<CrowdScene> {
    match op {
        AugmentOp::HFlip => {
            let w = scene.width() as f64;
            let heads = scene
                .heads()
                .iter()
                .map(|p| HeadPoint::new((w - 1.0 - p.x).max(0.0), p.y))
                .collect();
            CrowdScene::new(format!("{}+hflip", scene.id()), scene.image().flip_horizontal(), heads)
        }
        AugmentOp::Crop { x0, y0, width, height } => crop(scene, x0, y0, width, height),
        AugmentOp::RandomCrop { width, height } => {
            check_dims(width, height)?;
            if width > scene.width() || height > scene.height() {
                return Err(invalid!(
                    "crop {width}x{height} larger than scene {}x{}",
                    scene.width(),
                    scene.height()
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let x0 = rng.random_range(0..=(scene.width() - width) / DIM_QUANTUM) * DIM_QUANTUM;
            let y0 = rng.random_range(0..=(scene.height() - height) / DIM_QUANTUM) * DIM_QUANTUM;
            crop(scene, x0, y0, width, height)
        }
    }
}

fn crop(scene: &CrowdScene, x0: usize, y0: usize, width: usize, height: usize) -> Result<CrowdScene> {
    check_dims(width, height)?;
    if x0 + width > scene.width() || y0 + height > scene.height() {
        return Err(invalid!(
            "crop window {width}x{height}+{x0}+{y0} outside {}x{}",
            scene.width(),
            scene.height()
        ));
    }
    let image = scene.image().crop(x0, y0, width, height)?;
    let (fx, fy) = (x0 as f64, y0 as f64);
    let (fw, fh) = (width as f64, height as f64);
    let heads = scene
        .heads()
        .iter()
        .filter(|p| p.x >= fx && p.x < fx + fw && p.y >= fy && p.y < fy + fh)
        .map(|p| HeadPoint::new(p.x - fx, p.y - fy))
        .collect();
    CrowdScene::new(format!("{}+crop{x0},{y0},{width}x{height}", scene.id()), image, heads)
}
