//! The multiscale counting and localization network.
//!
//! Three branches encode the image at 1/8, 1/4 and 1/2 resolution with
//! stride-2 3x3 convolutions, widen their receptive field with dilated 3x3
//! layers, and emit a one-channel head map through a 1x1 convolution + ReLU.
//! The fusion network downsamples each branch embedding to 1/16 with 1, 2
//! and 3 stride-2 2x2 convolutions, concatenates the results channel-wise,
//! and convolves them to the density map whose sum is the predicted count.

mod config;
mod loss;
mod train;

pub use config::{DilationBlock, ModelConfig, Preset, DEFAULT_LOSS_WEIGHTS, FUSION_LAYERS};
pub use loss::{total_loss, LossBreakdown};
pub use train::{evaluate_mae, train, EpochRecord, TrainConfig, TrainLog};

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, shape_err, Result};
use crate::scalemap::{bin_all, Scale};
use crate::scene::{CrowdScene, DIM_QUANTUM};
use crate::tensornet::{
    check_gradients, concat_channels, GradCheckReport, read_checkpoint, split_channels, write_checkpoint, ConvLayer, Layer, ParamStore, Sequential,
    Tensor, Trace,
};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
struct Branch {
    trunk: Sequential,
    head: Sequential,
    fusion: Sequential,
}

/// Network parameters plus the layer graph that uses them.
#[derive(Debug, Clone)]
pub struct CrowdModel {
    config: ModelConfig,
    store: ParamStore,
    branches: [Branch; 3],
    output: ConvLayer,
}

/// Predictions for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    /// Head maps at S1, S2, S3.
    pub head_maps: [Tensor; 3],
    /// Fused S4 density map.
    pub density_map: Tensor,
    pub count: f64,
}

impl ModelOutput {
    /// Map estimated at `scale` (S4 is the density map).
    pub fn map(&self, scale: Scale) -> &Tensor {
        match scale {
            Scale::S1 => &self.head_maps[0],
            Scale::S2 => &self.head_maps[1],
            Scale::S3 => &self.head_maps[2],
            Scale::S4 => &self.density_map,
        }
    }

    /// Count implied by each scale's map, in [`Scale::ALL`] order.
    pub fn scale_counts(&self) -> [f64; 4] {
        Scale::ALL.map(|s| self.map(s).sum())
    }
}

/// Everything [`CrowdModel::backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    trunks: Vec<Trace>,
    heads: Vec<Trace>,
    fusions: Vec<Trace>,
    concat: Tensor,
}

fn conv_stack(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    net: &mut Sequential,
    prefix: &str,
    specs: &[crate::tensornet::ConvSpec],
) -> Result<()> {
    for (i, spec) in specs.iter().enumerate() {
        net.push(Layer::Conv(ConvLayer::init(store, &format!("{prefix}.{i}"), *spec, rng)?));
        net.push(Layer::Relu);
    }
    Ok(())
}

impl CrowdModel {
    /// Builds a model with He-normal weights drawn from a ChaCha8 stream
    /// seeded with `seed` and zero biases.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let mut branches = Vec::with_capacity(3);
        for (b, scale) in Scale::BRANCHES.iter().enumerate() {
            let mut trunk = Sequential::new();
            conv_stack(&mut store, &mut rng, &mut trunk, &format!("{scale}.encoder"), &config.encoder_specs(b))?;
            conv_stack(&mut store, &mut rng, &mut trunk, &format!("{scale}.dilated"), &config.dilation_specs(b))?;
            let mut head = Sequential::new();
            conv_stack(&mut store, &mut rng, &mut head, &format!("{scale}.head"), &[config.head_spec(b)])?;
            let mut fusion = Sequential::new();
            conv_stack(&mut store, &mut rng, &mut fusion, &format!("{scale}.fusion"), &config.fusion_specs(b))?;
            branches.push(Branch { trunk, head, fusion });
        }
        let output = ConvLayer::init(&mut store, "S4.output", config.output_spec(), &mut rng)?;
        let branches: [Branch; 3] = branches.try_into().expect("three branches");
        Ok(CrowdModel {
            config,
            store,
            branches,
            output,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Parameter names belonging to the head estimator of branch `scale`.
    pub fn head_param_names(&self, scale: Scale) -> Vec<String> {
        let b = scale.index() - 1;
        let layer = self.branches[b].head.convs().next().expect("head conv");
        vec![
            self.store.name(layer.weight).to_string(),
            self.store.name(layer.bias).to_string(),
        ]
    }

    /// Zeroes the final fusion convolution.
    pub fn zero_output_layer(&mut self) {
        let (w, b) = (self.output.weight, self.output.bias);
        self.store.value_mut(w).iter_mut().for_each(|v| *v = 0.0);
        self.store.value_mut(b).iter_mut().for_each(|v| *v = 0.0);
    }

    fn check_input(&self, image: &Tensor) -> Result<()> {
        let s = image.shape();
        if s.channels != self.config.in_channels {
            return Err(shape_err!(
                "model expects {} input channels, got {}",
                self.config.in_channels,
                s.channels
            ));
        }
        if s.width == 0 || s.height == 0 || !s.width.is_multiple_of(DIM_QUANTUM) || !s.height.is_multiple_of(DIM_QUANTUM) {
            return Err(shape_err!("input {}x{} is not a multiple of {DIM_QUANTUM}", s.width, s.height));
        }
        Ok(())
    }

    pub fn forward(&self, image: &Tensor) -> Result<ModelOutput> {
        self.forward_with(image, &self.store).map(|(o, _)| o)
    }

    pub fn forward_trace(&self, image: &Tensor) -> Result<(ModelOutput, ForwardTrace)> {
        self.forward_with(image, &self.store)
    }

    /// Forward pass against an arbitrary parameter store laid out like this
    /// model's (used for finite differences).
    pub fn forward_with(&self, image: &Tensor, store: &ParamStore) -> Result<(ModelOutput, ForwardTrace)> {
        self.check_input(image)?;
        let mut trunks = Vec::with_capacity(3);
        let mut heads = Vec::with_capacity(3);
        let mut fusions = Vec::with_capacity(3);
        let mut head_maps = Vec::with_capacity(3);
        let mut fused = Vec::with_capacity(3);
        for branch in &self.branches {
            let (embedding, t) = branch.trunk.forward(image, store)?;
            let (head_map, h) = branch.head.forward(&embedding, store)?;
            let (down, f) = branch.fusion.forward(&embedding, store)?;
            trunks.push(t);
            heads.push(h);
            fusions.push(f);
            head_maps.push(head_map);
            fused.push(down);
        }
        let concat = concat_channels(&fused.iter().collect::<Vec<_>>())?;
        let density_map = self.output.forward(&concat, store)?;
        let count = density_map.sum();
        let head_maps: [Tensor; 3] = head_maps.try_into().expect("three maps");
        Ok((
            ModelOutput {
                head_maps,
                density_map,
                count,
            },
            ForwardTrace {
                trunks,
                heads,
                fusions,
                concat,
            },
        ))
    }

    /// Accumulates parameter gradients for the loss gradients `grads`
    /// (S1..S4 order). A `None` entry contributes nothing: that output is
    /// treated as detached.
    pub fn backward(&mut self, trace: &ForwardTrace, grads: &[Option<Tensor>; 4]) -> Result<()> {
        let store = &mut self.store;
        let fusion_channels = self.config.fusion_channels;
        let concat_grad = match &grads[3] {
            Some(g) => Some(self.output.backward(&trace.concat, g, store)?),
            None => None,
        };
        let split = match &concat_grad {
            Some(g) => Some(split_channels(g, &[fusion_channels; 3])?),
            None => None,
        };
        for (b, branch) in self.branches.iter().enumerate() {
            let embed_shape = trace.trunks[b]
                .output()
                .ok_or_else(|| invalid!("trace is missing branch {b}"))?
                .shape();
            let mut grad_embed = Tensor::zeros(embed_shape);
            let mut touched = false;
            if let Some(g) = &grads[b] {
                grad_embed.add_assign(&branch.head.backward(&trace.heads[b], g, store)?)?;
                touched = true;
            }
            if let Some(parts) = &split {
                grad_embed.add_assign(&branch.fusion.backward(&trace.fusions[b], &parts[b], store)?)?;
                touched = true;
            }
            if touched {
                branch.trunk.backward(&trace.trunks[b], &grad_embed, store)?;
            }
        }
        Ok(())
    }

    /// Finite-difference check of every parameter gradient of the weighted
    /// loss on one scene, using central differences with step `h`.
    /// Stored gradients are overwritten; parameter values are untouched.
    pub fn gradient_check(&mut self, scene: &CrowdScene, h: f64) -> Result<GradCheckReport> {
        let targets = bin_all(scene);
        let weights = self.config.loss_weights;
        self.store.zero_grad();
        let (out, trace) = self.forward_trace(scene.image())?;
        let loss = total_loss(&out, &targets, &weights)?;
        self.backward(&trace, &loss.grads)?;
        let mut store = self.store.clone();
        let model = &*self;
        check_gradients(&mut store, h, |s| {
            let (o, _) = model.forward_with(scene.image(), s)?;
            Ok(total_loss(&o, &targets, &weights)?.total)
        })
    }

    /// Writes the configuration as JSON and the parameters as a PCN1 checkpoint.
    pub fn save(&self, config_path: impl AsRef<Path>, checkpoint_path: impl AsRef<Path>) -> Result<()> {
        let (cp, pp) = (config_path.as_ref(), checkpoint_path.as_ref());
        let text = serde_json::to_string_pretty(&self.config).map_err(|e| Error::json(cp, e))?;
        fs::write(cp, text + "\n").map_err(|e| Error::io(cp, e))?;
        self.save_checkpoint(pp)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_checkpoint(&self.store, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    /// Rebuilds a model from a config JSON and a checkpoint.
    pub fn load(config_path: impl AsRef<Path>, checkpoint_path: impl AsRef<Path>) -> Result<Self> {
        let (cp, pp) = (config_path.as_ref(), checkpoint_path.as_ref());
        let text = fs::read_to_string(cp).map_err(|e| Error::io(cp, e))?;
        let config: ModelConfig = serde_json::from_str(&text).map_err(|e| Error::json(cp, e))?;
        let mut model = CrowdModel::build(config, 0)?;
        let file = fs::File::open(pp).map_err(|e| Error::io(pp, e))?;
        let records = read_checkpoint(std::io::BufReader::new(file))?;
        model.store.load_records(&records)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalemap::bin_all;
    use crate::scene::synth_scene;
    use crate::tensornet::Shape;

    #[test]
    fn same_seed_same_parameters() {
        let a = CrowdModel::build(ModelConfig::default(), 3).unwrap();
        let b = CrowdModel::build(ModelConfig::default(), 3).unwrap();
        assert_eq!(a.params().snapshot(), b.params().snapshot());
        let c = CrowdModel::build(ModelConfig::default(), 4).unwrap();
        assert_ne!(a.params().snapshot(), c.params().snapshot());
    }

    #[test]
    fn parameter_count_by_hand() {
        // per branch S1/S2/S3: encoder 80 + 584*(depth-1), 584 per dilated
        // layer, head 9; fusion 264 per layer; output 24 + 1
        let s1 = 80 + 2 * 584 + 3 * 584 + 9;
        let s2 = 80 + 584 + 2 * 584 + 9;
        let s3 = 80 + 584 + 9;
        let fusion = 6 * 264;
        let want = s1 + s2 + s3 + fusion + 25;
        assert_eq!(want, 7132);
        let model = CrowdModel::build(ModelConfig::default(), 0).unwrap();
        assert_eq!(model.params().num_scalars(), want);
        assert_eq!(ModelConfig::default().num_params(), want);
        assert!(ModelConfig::reduced().num_params() <= 2000);
    }

    #[test]
    fn output_shapes_match_targets() {
        let model = CrowdModel::build(ModelConfig::default(), 1).unwrap();
        for (w, h) in [(64, 64), (48, 32), (16, 16)] {
            let scene = synth_scene(2, w, h, (1, 5)).unwrap();
            let out = model.forward(scene.image()).unwrap();
            for (m, t) in Scale::ALL.iter().zip(bin_all(&scene)) {
                assert_eq!(out.map(*m).shape(), Shape::new(1, t.rows(), t.cols()), "{w}x{h} {m}");
            }
        }
    }

    #[test]
    fn fusion_paths_meet_at_one_sixteenth() {
        let model = CrowdModel::build(ModelConfig::default(), 1).unwrap();
        let img = Tensor::filled(Shape::new(1, 64, 64), 0.3);
        let (_, trace) = model.forward_trace(&img).unwrap();
        for t in &trace.fusions {
            assert_eq!(t.output().unwrap().shape(), Shape::new(8, 4, 4));
        }
        let embeds: Vec<_> = trace.trunks.iter().map(|t| t.output().unwrap().shape()).collect();
        assert_eq!(embeds, vec![Shape::new(8, 8, 8), Shape::new(8, 16, 16), Shape::new(8, 32, 32)]);
    }

    #[test]
    fn zero_output_layer_counts_zero() {
        let mut model = CrowdModel::build(ModelConfig::default(), 1).unwrap();
        model.zero_output_layer();
        let scene = synth_scene(8, 64, 64, (10, 20)).unwrap();
        assert_eq!(model.forward(scene.image()).unwrap().count, 0.0);
    }

    #[test]
    fn rejects_bad_inputs_and_configs() {
        let model = CrowdModel::build(ModelConfig::default(), 1).unwrap();
        assert!(model.forward(&Tensor::zeros(Shape::new(1, 40, 64))).is_err());
        assert!(model.forward(&Tensor::zeros(Shape::new(3, 64, 64))).is_err());
        let bad = ModelConfig {
            fusion_layers: [1, 1, 1],
            ..Default::default()
        };
        assert!(CrowdModel::build(bad, 0).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let model = CrowdModel::build(ModelConfig::reduced(), 9).unwrap();
        model.save(dir.path().join("m.json"), dir.path().join("m.pcn")).unwrap();
        let back = CrowdModel::load(dir.path().join("m.json"), dir.path().join("m.pcn")).unwrap();
        assert_eq!(back.params().snapshot(), model.params().snapshot());
        assert_eq!(back.config(), model.config());
    }
}
