//! Head detections from the S3 map: threshold, 8-connected components, and
//! one detection per blob at its centroid.

use crate::error::{shape_err, Result};
use crate::scalemap::Scale;
use crate::tensornet::Tensor;

/// Default binarization threshold on the ReLU head map.
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), rows * cols, "grid size");
        BinaryGrid { rows, cols, cells }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.cols + c]
    }

    pub fn foreground(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn transpose(&self) -> BinaryGrid {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                cells.push(self.get(r, c));
            }
        }
        BinaryGrid::new(self.cols, self.rows, cells)
    }
}

/// Component labels: 0 is background, components are `1..=num_components`
/// numbered in raster order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<u32>,
    pub num_components: u32,
}

impl LabelGrid {
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.labels[r * self.cols + c]
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        id
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// Foreground where the (single-channel) map is strictly above `tau`.
pub fn threshold(heatmap: &Tensor, tau: f64) -> Result<BinaryGrid> {
    let s = heatmap.shape();
    if s.channels != 1 {
        return Err(shape_err!("threshold expects a single-channel map, got {s}"));
    }
    Ok(BinaryGrid::new(s.height, s.width, heatmap.data().iter().map(|&v| v > tau).collect()))
}

/// Two-pass 8-connected labeling.
pub fn connected_components(grid: &BinaryGrid) -> LabelGrid {
    let (rows, cols) = (grid.rows, grid.cols);
    const NONE: u32 = u32::MAX;
    let mut provisional = vec![NONE; rows * cols];
    let mut sets = UnionFind::default();
    for r in 0..rows {
        for c in 0..cols {
            if !grid.get(r, c) {
                continue;
            }
            // already-visited neighbours: W, NW, N, NE
            let mut label = NONE;
            let mut neighbours = [NONE; 4];
            if c > 0 {
                neighbours[0] = provisional[r * cols + c - 1];
            }
            if r > 0 {
                if c > 0 {
                    neighbours[1] = provisional[(r - 1) * cols + c - 1];
                }
                neighbours[2] = provisional[(r - 1) * cols + c];
                if c + 1 < cols {
                    neighbours[3] = provisional[(r - 1) * cols + c + 1];
                }
            }
            for &n in neighbours.iter().filter(|&&n| n != NONE) {
                if label == NONE {
                    label = n;
                } else {
                    sets.union(label, n);
                }
            }
            if label == NONE {
                label = sets.make_set();
            }
            provisional[r * cols + c] = label;
        }
    }

    let mut final_of_root = vec![0u32; sets.parent.len()];
    let mut next = 0;
    let labels = provisional
        .iter()
        .map(|&p| {
            if p == NONE {
                return 0;
            }
            let root = sets.find(p) as usize;
            if final_of_root[root] == 0 {
                next += 1;
                final_of_root[root] = next;
            }
            final_of_root[root]
        })
        .collect();
    LabelGrid {
        rows,
        cols,
        labels,
        num_components: next,
    }
}

/// A head detection in original-image pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    /// Sum of head-map values inside the blob.
    pub score: f64,
    /// Blob area in S3 cells.
    pub blob_size: usize,
}

/// Maps an S3 cell-index centroid to image coordinates: cell `c` spans
/// pixels `[2c, 2c + 2)`, so its centre is `2c + 1`.
pub fn s3_to_image(col: f64, row: f64) -> (f64, f64) {
    let b = Scale::S3.block() as f64;
    (col * b + b / 2.0, row * b + b / 2.0)
}

/// Detections for every blob of `head_map_s3 > tau`, by descending score.
pub fn extract_detections(head_map_s3: &Tensor, tau: f64, scene_dims: (usize, usize)) -> Result<Vec<Detection>> {
    let (w, h) = scene_dims;
    let (rows, cols) = Scale::S3.grid_dims(w, h);
    let s = head_map_s3.shape();
    if (s.channels, s.height, s.width) != (1, rows, cols) {
        return Err(shape_err!("S3 map for a {w}x{h} scene must be 1x{rows}x{cols}, got {s}"));
    }
    let labels = connected_components(&threshold(head_map_s3, tau)?);
    let n = labels.num_components as usize;
    // (sum col, sum row, mass, size)
    let mut acc = vec![(0.0, 0.0, 0.0, 0usize); n];
    for r in 0..rows {
        for c in 0..cols {
            let l = labels.get(r, c);
            if l == 0 {
                continue;
            }
            let a = &mut acc[l as usize - 1];
            a.0 += c as f64;
            a.1 += r as f64;
            a.2 += head_map_s3.get(0, r, c);
            a.3 += 1;
        }
    }
    let mut dets: Vec<Detection> = acc
        .into_iter()
        .map(|(sc, sr, mass, size)| {
            let (x, y) = s3_to_image(sc / size as f64, sr / size as f64);
            Detection {
                x,
                y,
                score: mass,
                blob_size: size,
            }
        })
        .collect();
    // stable: equal scores keep raster order
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(dets)
}

pub const DETECTIONS_CSV_HEADER: &str = "scene_id,x,y,score,blob_size";

/// Appends CSV rows (no header) for one scene's detections.
pub fn detections_csv_rows(scene_id: &str, dets: &[Detection], out: &mut String) {
    for d in dets {
        out.push_str(&format!("{scene_id},{:.6},{:.6},{:.8},{}\n", d.x, d.y, d.score, d.blob_size));
    }
}
