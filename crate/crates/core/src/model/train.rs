use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{total_loss, CrowdModel};
use crate::error::{invalid, Result};
use crate::scalemap::{bin_all, ScaleMap};
use crate::scene::{augment, AugmentOp, CrowdScene};
use crate::tensornet::{adam_step, AdamConfig};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Stop after this many epochs without a validation-MAE improvement.
    pub patience: usize,
    /// Seeds the per-epoch shuffle and augmentation draws.
    pub seed: u64,
    /// Randomly mirror half of the training images.
    pub hflip: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean over the epoch's training steps, measured before each update.
    pub loss_total: f64,
    pub loss_terms: [f64; 4],
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_mae: f64,
    pub stopped_early: bool,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "epoch,loss_total,loss_s1,loss_s2,loss_s3,loss_s4,val_mae";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{:.8},{:.8},{:.8},{:.8},{:.8},{:.8}\n",
                r.epoch, r.loss_total, r.loss_terms[0], r.loss_terms[1], r.loss_terms[2], r.loss_terms[3], r.val_mae
            ));
        }
        out
    }
}

/// Mean absolute error of the fused count over `scenes`.
pub fn evaluate_mae(model: &CrowdModel, scenes: &[CrowdScene]) -> Result<f64> {
    if scenes.is_empty() {
        return Err(invalid!("cannot evaluate on zero scenes"));
    }
    let mut err = 0.0;
    for s in scenes {
        err += (model.forward(s.image())?.count - s.count() as f64).abs();
    }
    Ok(err / scenes.len() as f64)
}

/// Trains with Adam at batch size 1 for up to `config.epochs` epochs.
///
/// After every epoch the fused-count MAE on `val` (or on `train` when `val`
/// is empty) decides early stopping, and the best epoch's parameters are
/// restored before returning. A non-finite loss or gradient restores the
/// last good parameters and fails with [`Error::Diverged`].
pub fn train(model: &mut CrowdModel, train: &[CrowdScene], val: &[CrowdScene], config: &TrainConfig) -> Result<TrainLog> {
    if train.is_empty() {
        return Err(invalid!("training split is empty"));
    }
    let weights = model.config().loss_weights;
    let val = if val.is_empty() { train } else { val };
    let targets: Vec<[ScaleMap; 4]> = train.iter().map(bin_all).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best = model.params().snapshot();
    let mut log = TrainLog {
        best_val_mae: f64::INFINITY,
        ..Default::default()
    };
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sum_total = 0.0;
        let mut sum_terms = [0.0; 4];
        for &i in &order {
            let flipped;
            let (scene, target) = if config.hflip && rng.random_bool(0.5) {
                flipped = augment(&train[i], AugmentOp::HFlip, 0)?;
                (&flipped, bin_all(&flipped))
            } else {
                (&train[i], targets[i].clone())
            };
            let (out, trace) = model.forward_trace(scene.image())?;
            let loss = total_loss(&out, &target, &weights)?;
            if !loss.total.is_finite() {
                model.params_mut().restore(&best)?;
                return Err(Error::Diverged {
                    epoch,
                    reason: format!("loss {} on scene {}", loss.total, scene.id()),
                });
            }
            sum_total += loss.total;
            for (s, t) in sum_terms.iter_mut().zip(loss.terms) {
                *s += t;
            }
            model.params_mut().zero_grad();
            model.backward(&trace, &loss.grads)?;
            if let Err(e) = adam_step(model.params_mut(), &config.adam) {
                model.params_mut().restore(&best)?;
                return Err(Error::Diverged {
                    epoch,
                    reason: e.to_string(),
                });
            }
        }
        let n = train.len() as f64;
        let val_mae = evaluate_mae(model, val)?;
        log.epochs.push(EpochRecord {
            epoch,
            loss_total: sum_total / n,
            loss_terms: sum_terms.map(|s| s / n),
            val_mae,
        });
        if val_mae < log.best_val_mae {
            log.best_val_mae = val_mae;
            log.best_epoch = epoch;
            best = model.params().snapshot();
        } else if epoch - log.best_epoch >= config.patience {
            log.stopped_early = true;
            break;
        }
    }
    model.params_mut().restore(&best)?;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, Preset};
    use crate::scene::synth_scene;

    fn scenes(n: u64) -> Vec<CrowdScene> {
        (0..n).map(|s| synth_scene(s, 32, 32, (1, 8)).unwrap()).collect()
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut model = CrowdModel::build(ModelConfig::reduced(), 1).unwrap();
        let before = model.params().snapshot();
        let cfg = TrainConfig {
            adam: AdamConfig {
                lr: 0.0,
                ..Preset::Toy.adam()
            },
            epochs: 3,
            patience: 5,
            seed: 0,
            hflip: false,
        };
        let data = scenes(1);
        let log = train(&mut model, &data, &[], &cfg).unwrap();
        assert_eq!(model.params().snapshot(), before);
        assert_eq!(log.epochs.len(), 3);
        assert!(log.epochs.windows(2).all(|w| w[0].loss_total == w[1].loss_total));
    }

    #[test]
    fn early_stopping_respects_patience() {
        // lr 0 keeps val MAE flat, so epoch 1 stays best
        let mut model = CrowdModel::build(ModelConfig::reduced(), 1).unwrap();
        let cfg = TrainConfig {
            adam: AdamConfig {
                lr: 0.0,
                ..Preset::Toy.adam()
            },
            epochs: 50,
            patience: 4,
            seed: 0,
            hflip: false,
        };
        let data = scenes(2);
        let log = train(&mut model, &data, &data, &cfg).unwrap();
        assert!(log.stopped_early);
        assert_eq!(log.best_epoch, 1);
        assert!(log.epochs.len() <= log.best_epoch + cfg.patience + 1);
        assert_eq!(log.epochs.len(), 5);
    }

    #[test]
    fn empty_training_split_is_rejected() {
        let mut model = CrowdModel::build(ModelConfig::reduced(), 1).unwrap();
        let cfg = TrainConfig {
            adam: Preset::Toy.adam(),
            epochs: 1,
            patience: 1,
            seed: 0,
            hflip: false,
        };
        assert!(train(&mut model, &[], &[], &cfg).is_err());
    }

    #[test]
    fn csv_layout() {
        let log = TrainLog {
            epochs: vec![EpochRecord {
                epoch: 1,
                loss_total: 2.5,
                loss_terms: [1.0, 2.0, 3.0, 4.0],
                val_mae: 0.25,
            }],
            ..Default::default()
        };
        assert_eq!(
            log.to_csv(),
            "epoch,loss_total,loss_s1,loss_s2,loss_s3,loss_s4,val_mae\n\
             1,2.50000000,1.00000000,2.00000000,3.00000000,4.00000000,0.25000000\n"
        );
    }
}
