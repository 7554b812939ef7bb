//! Head localization from the 1/2-scale head map: threshold, 8-connected
//! components, and blob centroids mapped back to image coordinates.
//!
//! Trains a quick model first so the heatmap has something to show, then
//! prints detections next to the ground truth for one test scene.
//!
//!     cargo run --release --example localize -- [TAU]

use crowdloc::cli::{split_validation, synth_scenes, RunConfig, SynthConfig};
use crowdloc::evalkit::{greedy_match, DEFAULT_RADIUS};
use crowdloc::localize::{connected_components, extract_detections, threshold};
use crowdloc::model::{train, CrowdModel, ModelConfig};
use crowdloc::scalemap::Scale;

fn main() -> crowdloc::Result<()> {
    let tau: f64 = std::env::args().nth(1).map_or(0.5, |s| s.parse().expect("TAU must be a number"));
    let cfg = RunConfig {
        epochs: Some(12),
        synth: SynthConfig {
            n_scenes: 60,
            count_range: [2, 12],
            ..SynthConfig::default()
        },
        ..RunConfig::default()
    };
    let (train_split, test) = synth_scenes(&cfg)?;
    let (fit, val) = split_validation(&train_split, cfg.val_fraction);
    let mut model = CrowdModel::build(ModelConfig::default(), cfg.seed)?;
    train(&mut model, fit, val, &cfg.train_config())?;

    let scene = &test[0];
    let heatmap = model.forward(scene.image())?.map(Scale::S3).clone();
    let mask = threshold(&heatmap, tau)?;
    let labels = connected_components(&mask);
    println!(
        "{}: {} heads; S3 map {}x{}, {} cells above {tau}, {} blobs",
        scene.id(),
        scene.count(),
        mask.rows,
        mask.cols,
        mask.foreground(),
        labels.num_components
    );

    let dets = extract_detections(&heatmap, tau, (scene.width(), scene.height()))?;
    for d in &dets {
        println!("  detection ({:6.2}, {:6.2}) score {:.3} from {} cells", d.x, d.y, d.score, d.blob_size);
    }
    let m = greedy_match(&dets, scene.heads(), DEFAULT_RADIUS)?;
    println!(
        "radius {DEFAULT_RADIUS}: {} TP, {} FP, {} FN",
        m.true_positives.len(),
        m.false_positives.len(),
        m.false_negatives.len()
    );
    Ok(())
}
