#![allow(dead_code)]

use std::collections::HashMap;

use crowdloc::localize::{BinaryGrid, LabelGrid};
use crowdloc::model::CrowdModel;
use crowdloc::scene::{CrowdScene, HeadPoint};
use crowdloc::tensornet::{Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Biases drawn away from zero so no unit sits exactly on a ReLU kink,
/// where central differences are meaningless.
pub fn move_off_kinks(model: &mut CrowdModel, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let store = model.params_mut();
    for id in store.ids().collect::<Vec<_>>() {
        if store.name(id).ends_with(".bias") {
            store.value_mut(id).iter_mut().for_each(|b| *b = rng.random_range(0.01..0.1));
        }
    }
}

/// A scene with uniform-random heads (no separation constraint) and a
/// random image, for tests that only care about geometry.
pub fn random_scene(rng: &mut impl Rng, width: usize, height: usize, count: usize) -> CrowdScene {
    let image = Tensor::from_fn(Shape::new(1, height, width), |_, _, _| rng.random_range(0.0..1.0));
    let heads = (0..count)
        .map(|_| HeadPoint {
            x: rng.random_range(0.0..width as f64),
            y: rng.random_range(0.0..height as f64),
        })
        .collect();
    CrowdScene::new("random", image, heads).expect("valid scene")
}

pub fn random_grid(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> BinaryGrid {
    BinaryGrid::new(rows, cols, (0..rows * cols).map(|_| rng.random_bool(density)).collect())
}

/// Component id per cell (None for background) by 8-connected flood fill,
/// numbered in order of first discovery in raster order.
pub fn flood_fill(grid: &BinaryGrid) -> Vec<Option<usize>> {
    let (rows, cols) = (grid.rows, grid.cols);
    let mut out = vec![None; rows * cols];
    let mut next = 0;
    for start in 0..rows * cols {
        if !grid.cells[start] || out[start].is_some() {
            continue;
        }
        let mut stack = vec![start];
        out[start] = Some(next);
        while let Some(i) = stack.pop() {
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                        continue;
                    }
                    let j = nr as usize * cols + nc as usize;
                    if grid.cells[j] && out[j].is_none() {
                        out[j] = Some(next);
                        stack.push(j);
                    }
                }
            }
        }
        next += 1;
    }
    out
}

/// The labels of a LabelGrid as Option (0 = background).
pub fn label_vec(labels: &LabelGrid) -> Vec<Option<usize>> {
    labels.labels.iter().map(|&l| (l != 0).then_some(l as usize)).collect()
}

/// True when `a` and `b` induce the same partition (identical background,
/// and a bijection between label values).
pub fn same_partition(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                if *fwd.entry(*x).or_insert(*y) != *y || *back.entry(*y).or_insert(*x) != *x {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}
