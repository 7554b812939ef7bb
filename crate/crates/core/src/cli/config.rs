use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evalkit::{EvalOptions, DEFAULT_RADIUS};
use crate::localize::DEFAULT_TAU;
use crate::model::{ModelConfig, Preset, TrainConfig};
use crate::Error;

/// Dataset synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_scenes: usize,
    pub width: usize,
    pub height: usize,
    pub count_range: [usize; 2],
    /// Leading fraction of scenes assigned to `train`; the rest go to `test`.
    pub train_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_scenes: 200,
            width: 64,
            height: 64,
            count_range: [1, 30],
            train_fraction: 0.8,
        }
    }
}

/// Everything a command needs. Loaded from a JSON file, then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub preset: Preset,
    pub seed: u64,
    pub model: ModelConfig,
    /// Whether L1, L2, L3 take part in training. L4 always does.
    pub ablation: [bool; 3],
    pub tau: f64,
    pub radius: f64,
    /// Defaults to the preset's epoch budget.
    pub epochs: Option<usize>,
    pub patience: Option<usize>,
    pub hflip: bool,
    /// Trailing fraction of the train split held out for early stopping.
    pub val_fraction: f64,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            out: PathBuf::from("out"),
            checkpoint: None,
            preset: Preset::Toy,
            seed: 42,
            model: ModelConfig::default(),
            ablation: [true; 3],
            tau: DEFAULT_TAU,
            radius: DEFAULT_RADIUS,
            epochs: None,
            patience: None,
            hflip: false,
            val_fraction: 0.125,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.radius > 0.0) || !self.tau.is_finite() {
            return Err(invalid!("radius must be positive and tau finite"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(invalid!("val_fraction must lie in [0, 1)"));
        }
        let s = &self.synth;
        if !(0.0..=1.0).contains(&s.train_fraction) {
            return Err(invalid!("train_fraction must lie in [0, 1]"));
        }
        if s.count_range[0] > s.count_range[1] {
            return Err(invalid!("count_range {:?} is empty", s.count_range));
        }
        Ok(())
    }

    /// Loss weights after the ablation mask.
    pub fn effective_weights(&self) -> [f64; 4] {
        let mut w = self.model.loss_weights;
        for (j, keep) in self.ablation.iter().enumerate() {
            if !keep {
                w[j] = 0.0;
            }
        }
        w
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            loss_weights: self.effective_weights(),
            ..self.model.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            adam: self.preset.adam(),
            epochs: self.epochs.unwrap_or(self.preset.epochs()),
            patience: self.patience.unwrap_or(self.preset.patience()),
            seed: self.seed,
            hflip: self.hflip,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            tau: self.tau,
            radius: self.radius,
        }
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| invalid!("no dataset given (use --dataset or the config's \"dataset\")"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 7, "ablation": [true, false, true]}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.effective_weights(), [0.1, 0.0, 0.3, 0.1]);
        assert_eq!(c.preset, Preset::Toy);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 7}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"preset": "fast"}"#).is_err());
    }
}
