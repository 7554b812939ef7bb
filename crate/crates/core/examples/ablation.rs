//! Loss ablation: retrain with each of the S1..S3 supervision terms removed
//! and compare test error against the run with all terms.
//!
//!     cargo run --release --example ablation -- [EPOCHS]

use crowdloc::cli::{ablation_csv, cmd_ablate, cmd_synth, RunConfig, SynthConfig};

fn main() -> crowdloc::Result<()> {
    let epochs = std::env::args().nth(1).map_or(8, |s| s.parse().expect("EPOCHS must be an integer"));
    let root = std::env::temp_dir().join("crowdloc_ablation");
    let data = root.join("data");
    cmd_synth(&RunConfig {
        out: data.clone(),
        synth: SynthConfig {
            n_scenes: 50,
            ..SynthConfig::default()
        },
        ..RunConfig::default()
    })?;

    let rows = cmd_ablate(&RunConfig {
        dataset: Some(data),
        out: root.join("runs"),
        epochs: Some(epochs),
        ..RunConfig::default()
    })?;
    print!("{}", ablation_csv(&rows));
    let all = rows.last().expect("four rows");
    for r in &rows[..3] {
        println!("{}: {:+.3} MAE vs all terms", r.run, r.mae - all.mae);
    }
    Ok(())
}
