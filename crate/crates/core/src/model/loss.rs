use super::ModelOutput;
use crate::error::Result;
use crate::scalemap::{Scale, ScaleMap};
use crate::tensornet::{mse_loss, Tensor};

/// Weighted multiscale loss for one image.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    /// `sum_j w_j L_j`.
    pub total: f64,
    /// Unweighted `L_j = ||D^_j - D_j||^2`, S1..S4.
    pub terms: [f64; 4],
    /// `w_j dL_j / dD^_j`; `None` where `w_j == 0` so that term is left out
    /// of back-propagation entirely.
    pub grads: [Option<Tensor>; 4],
}

pub fn total_loss(output: &ModelOutput, targets: &[ScaleMap; 4], weights: &[f64; 4]) -> Result<LossBreakdown> {
    let mut terms = [0.0; 4];
    let mut grads: [Option<Tensor>; 4] = Default::default();
    let mut total = 0.0;
    for (j, scale) in Scale::ALL.iter().enumerate() {
        let target = targets[j].to_tensor();
        let (l, mut g) = mse_loss(output.map(*scale), &target)?;
        terms[j] = l;
        if weights[j] != 0.0 {
            total += weights[j] * l;
            g.scale(weights[j]);
            grads[j] = Some(g);
        }
    }
    Ok(LossBreakdown { total, terms, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CrowdModel, ModelConfig};
    use crate::scalemap::bin_all;
    use crate::scene::synth_scene;
    use crate::tensornet::Shape;

    fn output_from_targets(targets: &[ScaleMap; 4], offset: f64) -> ModelOutput {
        let mut maps: Vec<Tensor> = targets.iter().map(|t| t.to_tensor()).collect();
        for m in &mut maps {
            m.data_mut().iter_mut().for_each(|v| *v += offset);
        }
        let density_map = maps.pop().unwrap();
        ModelOutput {
            count: density_map.sum(),
            head_maps: maps.try_into().unwrap(),
            density_map,
        }
    }

    #[test]
    fn perfect_prediction_is_zero_loss() {
        let scene = synth_scene(3, 32, 32, (4, 4)).unwrap();
        let targets = bin_all(&scene);
        let out = output_from_targets(&targets, 0.0);
        let l = total_loss(&out, &targets, &[0.1, 0.2, 0.3, 0.1]).unwrap();
        assert_eq!(l.total, 0.0);
        assert_eq!(l.terms, [0.0; 4]);
    }

    #[test]
    fn unit_terms_weigh_to_point_seven() {
        // 16x16 scene: 2x2, 4x4, 8x8 and 1x1 maps; give each map one unit error
        let scene = synth_scene(3, 16, 16, (0, 0)).unwrap();
        let targets = bin_all(&scene);
        let mut out = output_from_targets(&targets, 0.0);
        for m in out.head_maps.iter_mut() {
            m.data_mut()[0] = 1.0;
        }
        out.density_map = Tensor::filled(Shape::new(1, 1, 1), 1.0);
        let l = total_loss(&out, &targets, &[0.1, 0.2, 0.3, 0.1]).unwrap();
        assert_eq!(l.terms, [1.0; 4]);
        assert!((l.total - 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_drops_the_gradient() {
        let scene = synth_scene(3, 32, 32, (4, 4)).unwrap();
        let targets = bin_all(&scene);
        let out = output_from_targets(&targets, 0.5);
        let l = total_loss(&out, &targets, &[0.0, 0.2, 0.3, 0.1]).unwrap();
        assert!(l.grads[0].is_none() && l.grads[1..].iter().all(Option::is_some));
        assert!(l.terms[0] > 0.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let model = CrowdModel::build(ModelConfig::reduced(), 0).unwrap();
        let out = model.forward(&Tensor::zeros(Shape::new(1, 32, 32))).unwrap();
        let targets = bin_all(&synth_scene(0, 16, 16, (1, 1)).unwrap());
        assert!(total_loss(&out, &targets, &[0.1; 4]).is_err());
    }
}
