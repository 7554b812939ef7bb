//! Full evaluation bundle: counting MAE/RMSE, localization AP with its
//! precision-recall curve, per-scale MAE and MAE by density quintile.
//!
//!     cargo run --release --example evaluate -- [OUT_DIR]

use std::path::PathBuf;

use crowdloc::cli::{split_validation, synth_scenes, RunConfig, SynthConfig};
use crowdloc::evalkit::per_scale_report;
use crowdloc::model::{train, CrowdModel, ModelConfig};

fn main() -> crowdloc::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("crowdloc_eval"));
    let cfg = RunConfig {
        epochs: Some(10),
        tau: 0.3,
        synth: SynthConfig {
            n_scenes: 60,
            ..SynthConfig::default()
        },
        ..RunConfig::default()
    };
    let (train_split, test) = synth_scenes(&cfg)?;
    let (fit, val) = split_validation(&train_split, cfg.val_fraction);
    let mut model = CrowdModel::build(ModelConfig::default(), cfg.seed)?;
    train(&mut model, fit, val, &cfg.train_config())?;

    let report = per_scale_report(&model, &test, &cfg.eval_options())?;
    print!("{}", report.metrics_csv());
    print!("{}", report.density_groups_csv());
    report.write_to(&out)?;
    println!("report written to {}", out.display());
    Ok(())
}
