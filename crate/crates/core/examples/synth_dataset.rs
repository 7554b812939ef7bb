//! Generate a small synthetic crowd dataset on disk.
//!
//!     cargo run --release --example synth_dataset -- [OUT_DIR]

use std::path::PathBuf;

use crowdloc::cli::{cmd_synth, RunConfig, SynthConfig};
use crowdloc::scene::load_dataset;

fn main() -> crowdloc::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("crowdloc_synth"));
    let cfg = RunConfig {
        out: out.clone(),
        synth: SynthConfig {
            n_scenes: 20,
            count_range: [0, 25],
            ..SynthConfig::default()
        },
        ..RunConfig::default()
    };
    let manifest = cmd_synth(&cfg)?;
    println!("{}: {} train, {} test", out.display(), manifest.train.len(), manifest.test.len());

    let data = load_dataset(&out)?;
    for scene in data.test.iter() {
        println!("  {} {}x{} with {} heads", scene.id(), scene.width(), scene.height(), scene.count());
    }
    Ok(())
}
