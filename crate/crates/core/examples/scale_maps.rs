//! Bin point annotations into the four count maps and show that each
//! coarser map is the 2x2 block sum of the next finer one.
//!
//!     cargo run --release --example scale_maps

use crowdloc::scalemap::{bin_all, Scale};
use crowdloc::scene::{CrowdScene, HeadPoint};
use crowdloc::tensornet::{Shape, Tensor};

fn print_map(name: Scale, rows: usize, cols: usize, get: impl Fn(usize, usize) -> u32) {
    println!("{name} ({rows}x{cols}):");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| get(r, c).to_string()).collect();
        println!("  {}", line.join(" "));
    }
}

fn main() -> crowdloc::Result<()> {
    let heads = [(3.0, 3.0), (5.5, 6.0), (17.0, 2.0), (30.9, 31.9), (16.0, 16.0), (15.99, 15.99)];
    let image = Tensor::filled(Shape::new(1, 32, 32), 0.1);
    let scene = CrowdScene::new("demo", image, heads.iter().map(|&(x, y)| HeadPoint { x, y }).collect())?;

    let maps = bin_all(&scene);
    // Coarse to fine: S4 (1/16) is the fused density scale.
    for scale in [Scale::S4, Scale::S1, Scale::S2] {
        let m = &maps[scale.index() - 1];
        print_map(scale, m.rows(), m.cols(), |r, c| m.get(r, c));
        println!("  total {}", m.total());
    }

    let (s1, s4) = (&maps[0], &maps[3]);
    assert_eq!(s1.block_sum_2x2(), s4.cells());
    println!("S4 == blocksum(S1): ok");
    println!("S4 as JSON: {}", s4.to_json());
    Ok(())
}
