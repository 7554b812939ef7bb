use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, CrowdScene, HeadPoint};
use crate::error::{invalid, Result};
use crate::tensornet::{Shape, Tensor};

/// Minimum distance in pixels between any two synthetic heads.
pub const MIN_HEAD_SEPARATION: f64 = 4.0;

const PLACEMENT_ATTEMPTS_PER_HEAD: usize = 500;

/// Rendering knobs for [`synth_scene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Background noise is uniform in `[0, background)`.
    pub background: f64,
    pub amplitude: (f64, f64),
    /// Gaussian bump radius range in pixels.
    pub sigma: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            background: 0.1,
            amplitude: (0.7, 0.9),
            sigma: (1.0, 1.6),
        }
    }
}

/// Deterministic grayscale scene with `M ~ U[min, max]` heads, each drawn as
/// a Gaussian bump on a noisy background.
pub fn synth_scene(seed: u64, width: usize, height: usize, count_range: (usize, usize)) -> Result<CrowdScene> {
    synth_scene_with(seed, width, height, count_range, &SynthParams::default())
}

pub fn synth_scene_with(
    seed: u64,
    width: usize,
    height: usize,
    count_range: (usize, usize),
    params: &SynthParams,
) -> Result<CrowdScene> {
    check_dims(width, height)?;
    let (lo, hi) = count_range;
    if lo > hi {
        return Err(invalid!("count range [{lo}, {hi}] is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(lo..=hi);

    let (w, h) = (width as f64, height as f64);
    let mut heads: Vec<HeadPoint> = Vec::with_capacity(count);
    let mut attempts = 0;
    while heads.len() < count {
        if attempts >= PLACEMENT_ATTEMPTS_PER_HEAD * count {
            return Err(invalid!(
                "cannot place {count} heads {MIN_HEAD_SEPARATION} px apart in {width}x{height}"
            ));
        }
        attempts += 1;
        let p = HeadPoint::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
        if heads.iter().all(|q| q.distance(p.x, p.y) >= MIN_HEAD_SEPARATION) {
            heads.push(p);
        }
    }

    let bumps: Vec<(HeadPoint, f64, f64)> = heads
        .iter()
        .map(|&p| {
            let a = rng.random_range(params.amplitude.0..=params.amplitude.1);
            let s = rng.random_range(params.sigma.0..=params.sigma.1);
            (p, a, s)
        })
        .collect();
    let mut image = Tensor::from_fn(Shape::new(1, height, width), |_, _, _| {
        rng.random_range(0.0..params.background)
    });
    for y in 0..height {
        for x in 0..width {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let peak = bumps
                .iter()
                .map(|(p, a, s)| {
                    let d2 = (p.x - cx).powi(2) + (p.y - cy).powi(2);
                    a * (-d2 / (2.0 * s * s)).exp()
                })
                .fold(0.0, f64::max);
            let v = image.get(0, y, x) + peak;
            image.set(0, y, x, v.min(1.0));
        }
    }
    CrowdScene::new(format!("synth_{seed}"), image, heads)
}
