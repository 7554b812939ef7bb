//! Train the counting network on synthetic scenes with the toy optimizer
//! preset, then compare its test MAE with always predicting the mean count.
//!
//!     cargo run --release --example train_toy -- [EPOCHS]

use crowdloc::cli::{split_validation, synth_scenes, RunConfig, SynthConfig};
use crowdloc::model::{evaluate_mae, train, CrowdModel, ModelConfig, Preset};

fn main() -> crowdloc::Result<()> {
    let epochs = std::env::args().nth(1).map_or(15, |s| s.parse().expect("EPOCHS must be an integer"));
    let cfg = RunConfig {
        preset: Preset::Toy,
        epochs: Some(epochs),
        synth: SynthConfig {
            n_scenes: 80,
            ..SynthConfig::default()
        },
        ..RunConfig::default()
    };
    let (train_split, test) = synth_scenes(&cfg)?;
    let (fit, val) = split_validation(&train_split, cfg.val_fraction);

    let mut model = CrowdModel::build(ModelConfig::default(), cfg.seed)?;
    let log = train(&mut model, fit, val, &cfg.train_config())?;
    print!("{}", log.to_csv());

    let mean = fit.iter().map(|s| s.count() as f64).sum::<f64>() / fit.len() as f64;
    let baseline = test.iter().map(|s| (s.count() as f64 - mean).abs()).sum::<f64>() / test.len() as f64;
    println!(
        "best epoch {}: test MAE {:.3} vs mean-count baseline {:.3}",
        log.best_epoch,
        evaluate_mae(&model, &test)?,
        baseline
    );
    Ok(())
}
