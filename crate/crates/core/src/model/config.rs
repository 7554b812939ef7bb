use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensornet::{AdamConfig, ConvSpec};

/// Fusion depth per branch (S1, S2, S3): each stride-2 layer halves the
/// resolution, so 1/8, 1/4 and 1/2 all arrive at 1/16.
pub const FUSION_LAYERS: [usize; 3] = [1, 2, 3];

/// Default loss weights w1..w4.
pub const DEFAULT_LOSS_WEIGHTS: [f64; 4] = [0.1, 0.2, 0.3, 0.1];

/// Stride-2 3x3 encoder layers needed to reach each branch scale.
pub(crate) const ENCODER_DEPTH: [usize; 3] = [3, 2, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilationBlock {
    pub layers: usize,
    pub rate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_channels: usize,
    /// Embedding width of branches S1, S2, S3.
    pub encoder_channels: [usize; 3],
    pub dilation_layers: [DilationBlock; 3],
    pub fusion_channels: usize,
    pub fusion_layers: [usize; 3],
    /// Kernel of the final fusion convolution.
    pub fusion_kernel: usize,
    pub loss_weights: [f64; 4],
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            in_channels: 1,
            encoder_channels: [8, 8, 8],
            dilation_layers: [
                DilationBlock { layers: 3, rate: 2 },
                DilationBlock { layers: 2, rate: 2 },
                DilationBlock { layers: 1, rate: 2 },
            ],
            fusion_channels: 8,
            fusion_layers: FUSION_LAYERS,
            fusion_kernel: 1,
            loss_weights: DEFAULT_LOSS_WEIGHTS,
        }
    }
}

impl ModelConfig {
    /// A model small enough for exhaustive finite-difference checks.
    pub fn reduced() -> Self {
        ModelConfig {
            encoder_channels: [2, 2, 2],
            dilation_layers: [DilationBlock { layers: 1, rate: 2 }; 3],
            fusion_channels: 2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fusion_layers != FUSION_LAYERS {
            return Err(invalid!(
                "fusion layer counts must be {FUSION_LAYERS:?}, got {:?}",
                self.fusion_layers
            ));
        }
        if self.in_channels == 0 || self.fusion_channels == 0 || self.encoder_channels.contains(&0) {
            return Err(invalid!("channel widths must be positive"));
        }
        if self.dilation_layers.iter().any(|d| d.rate == 0) {
            return Err(invalid!("dilation rates must be positive"));
        }
        if self.fusion_kernel != 1 && self.fusion_kernel != 3 {
            return Err(invalid!("final fusion kernel must be 1 or 3 to preserve the 1/16 grid"));
        }
        if self.loss_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid!("loss weights must be finite and non-negative"));
        }
        Ok(())
    }

    pub(crate) fn encoder_specs(&self, branch: usize) -> Vec<ConvSpec> {
        let width = self.encoder_channels[branch];
        (0..ENCODER_DEPTH[branch])
            .map(|i| {
                let cin = if i == 0 { self.in_channels } else { width };
                ConvSpec::new(cin, width, 3).stride(2).padding(1)
            })
            .collect()
    }

    pub(crate) fn dilation_specs(&self, branch: usize) -> Vec<ConvSpec> {
        let width = self.encoder_channels[branch];
        let d = self.dilation_layers[branch];
        (0..d.layers)
            .map(|_| ConvSpec::new(width, width, 3).dilation(d.rate).padding(d.rate))
            .collect()
    }

    pub(crate) fn head_spec(&self, branch: usize) -> ConvSpec {
        ConvSpec::new(self.encoder_channels[branch], 1, 1)
    }

    pub(crate) fn fusion_specs(&self, branch: usize) -> Vec<ConvSpec> {
        (0..self.fusion_layers[branch])
            .map(|i| {
                let cin = if i == 0 { self.encoder_channels[branch] } else { self.fusion_channels };
                ConvSpec::new(cin, self.fusion_channels, 2).stride(2)
            })
            .collect()
    }

    pub(crate) fn output_spec(&self) -> ConvSpec {
        ConvSpec::new(3 * self.fusion_channels, 1, self.fusion_kernel).padding(self.fusion_kernel / 2)
    }

    /// Number of scalar parameters the model built from this config holds.
    pub fn num_params(&self) -> usize {
        let mut n = self.output_spec().num_params();
        for b in 0..3 {
            n += self
                .encoder_specs(b)
                .iter()
                .chain(&self.dilation_specs(b))
                .chain(&self.fusion_specs(b))
                .map(ConvSpec::num_params)
                .sum::<usize>();
            n += self.head_spec(b).num_params();
        }
        n
    }
}

/// Optimizer preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Learning rate 1e-6 for long, slow schedules.
    Paper,
    /// Learning rate 1e-3 for desk-scale runs from random initialization.
    Toy,
}

impl Preset {
    pub fn adam(self) -> AdamConfig {
        let lr = match self {
            Preset::Paper => 1e-6,
            Preset::Toy => 1e-3,
        };
        AdamConfig {
            lr,
            beta1: 0.934,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn epochs(self) -> usize {
        match self {
            Preset::Paper => 200,
            Preset::Toy => 40,
        }
    }

    pub fn patience(self) -> usize {
        match self {
            Preset::Paper => 20,
            Preset::Toy => 10,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "toy" => Ok(Preset::Toy),
            other => Err(invalid!("unknown preset {other:?} (expected paper or toy)")),
        }
    }
}
