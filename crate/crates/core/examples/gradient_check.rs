//! Finite-difference check of the full model's backward pass.
//!
//! Builds the reduced architecture, runs one weighted loss on a small
//! synthetic scene and compares every analytic parameter gradient with a
//! central difference.
//!
//!     cargo run --release --example gradient_check

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdloc::model::{CrowdModel, ModelConfig};
use crowdloc::scene::synth_scene;

fn main() -> crowdloc::Result<()> {
    let scene = synth_scene(7, 16, 16, (2, 4))?;
    let mut model = CrowdModel::build(ModelConfig::reduced(), 11)?;
    // Zero-initialized biases put dead units exactly on the ReLU kink, where
    // a central difference sees half a slope. Move to a generic point.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let store = model.params_mut();
    for id in store.ids().collect::<Vec<_>>() {
        if store.name(id).ends_with(".bias") {
            store.value_mut(id).iter_mut().for_each(|b| *b = rng.random_range(0.01..0.1));
        }
    }
    println!("{} parameters, scene with {} heads", model.params().num_scalars(), scene.count());

    let start = Instant::now();
    let report = model.gradient_check(&scene, 1e-5)?;
    println!(
        "checked {} scalars in {:.2?}: max relative error {:.3e}",
        report.checked,
        start.elapsed(),
        report.max_rel_error
    );
    if let Some((name, i, analytic, numeric)) = &report.worst {
        println!("worst: {name}[{i}] analytic {analytic:.9e} numeric {numeric:.9e}");
    }
    Ok(())
}
