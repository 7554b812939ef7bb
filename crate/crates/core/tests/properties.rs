mod common;

use common::{flood_fill, label_vec, move_off_kinks, random_grid, random_scene, same_partition};
use crowdloc::evalkit::{average_precision, counting_errors, greedy_match, SceneDetections};
use crowdloc::localize::{connected_components, extract_detections, threshold, Detection};
use crowdloc::model::{total_loss, CrowdModel, ModelConfig};
use crowdloc::scalemap::{bin_all, Scale};
use crowdloc::scene::{load_scene, save_scene, CrowdScene, HeadPoint, ImageStorage};
use crowdloc::tensornet::{Shape, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=8, 2usize..=8).prop_map(|(w, h)| (16 * w, 16 * h))
}

fn detections(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Detection> {
    let mut d: Vec<Detection> = (0..n)
        .map(|_| Detection {
            x: rng.random_range(0.0..extent),
            y: rng.random_range(0.0..extent),
            score: rng.random_range(0.01..1.0),
            blob_size: 1,
        })
        .collect();
    d.sort_by(|a, b| b.score.total_cmp(&a.score));
    d
}

fn points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<HeadPoint> {
    (0..n)
        .map(|_| HeadPoint {
            x: rng.random_range(0.0..extent),
            y: rng.random_range(0.0..extent),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_are_preserved_and_maps_refine((w, h) in dims(), count in 0usize..120, seed in any::<u64>()) {
        let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), w, h, count);
        let maps = bin_all(&scene);
        for m in &maps {
            prop_assert_eq!(m.total(), count as u64);
            prop_assert_eq!(m.cells().iter().map(|&c| c as u64).sum::<u64>(), count as u64);
        }
        // S3 -> S2 -> S1 -> S4, each a 2x2 block sum of the previous.
        let (s1, s2, s3, s4) = (&maps[0], &maps[1], &maps[2], &maps[3]);
        prop_assert_eq!(s3.block_sum_2x2(), s2.cells());
        prop_assert_eq!(s2.block_sum_2x2(), s1.cells());
        prop_assert_eq!(s1.block_sum_2x2(), s4.cells());
    }

    #[test]
    fn components_match_flood_fill_and_survive_transpose(
        rows in 1usize..24, cols in 1usize..24, density in 0.05f64..0.95, seed in any::<u64>()
    ) {
        let grid = random_grid(&mut ChaCha8Rng::seed_from_u64(seed), rows, cols, density);
        let labels = connected_components(&grid);
        let oracle = flood_fill(&grid);
        prop_assert!(same_partition(&label_vec(&labels), &oracle));
        prop_assert_eq!(labels.num_components as usize, oracle.iter().flatten().max().map_or(0, |m| m + 1));

        let t = connected_components(&grid.transpose());
        let back: Vec<Option<usize>> = (0..rows * cols)
            .map(|i| {
                let (r, c) = (i / cols, i % cols);
                let l = t.get(c, r);
                (l != 0).then_some(l as usize)
            })
            .collect();
        prop_assert!(same_partition(&label_vec(&labels), &back));
    }

    #[test]
    fn foreground_shrinks_as_tau_rises(seed in any::<u64>(), lo in 0.0f64..1.0, step in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = Tensor::from_fn(Shape::new(1, 12, 12), |_, _, _| rng.random_range(0.0..2.0));
        let (a, b) = (threshold(&map, lo).unwrap(), threshold(&map, lo + step).unwrap());
        prop_assert!(b.foreground() <= a.foreground());
        prop_assert!(a.cells.iter().zip(&b.cells).all(|(&x, &y)| x || !y));
        let total = |tau| extract_detections(&map, tau, (24, 24)).unwrap().iter().map(|d| d.score).sum::<f64>();
        prop_assert!(total(lo + step) <= total(lo) + 1e-12);
    }

    #[test]
    fn matching_accounts_for_every_point(seed in any::<u64>(), nd in 0usize..15, ng in 0usize..15, radius in 0.5f64..12.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = detections(&mut rng, nd, 30.0);
        let gt = points(&mut rng, ng, 30.0);
        let m = greedy_match(&dets, &gt, radius).unwrap();
        prop_assert_eq!(m.true_positives.len() + m.false_negatives.len(), ng);
        prop_assert_eq!(m.true_positives.len() + m.false_positives.len(), nd);
        for &(_, _, dist) in &m.true_positives {
            prop_assert!(dist <= radius);
        }
    }

    #[test]
    fn ap_ignores_monotone_score_transforms(seed in any::<u64>(), scenes in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool: Vec<SceneDetections> = (0..scenes)
            .map(|_| {
                let (nd, ng) = (rng.random_range(0..8), rng.random_range(1..8));
                SceneDetections { detections: detections(&mut rng, nd, 20.0), gt: points(&mut rng, ng, 20.0) }
            })
            .collect();
        let warped: Vec<SceneDetections> = pool
            .iter()
            .map(|s| SceneDetections {
                detections: s.detections.iter().map(|d| Detection { score: (3.0 * d.score).exp() - 0.5, ..*d }).collect(),
                gt: s.gt.clone(),
            })
            .collect();
        let (a, b) = (average_precision(&pool, 5.0).unwrap(), average_precision(&warped, 5.0).unwrap());
        prop_assert!((a.ap - b.ap).abs() < 1e-12);

        // The loosest operating point is "keep everything".
        if let Some(last) = a.curve.last() {
            let (mut tp, mut nd, mut ng) = (0, 0, 0);
            for s in &pool {
                tp += greedy_match(&s.detections, &s.gt, 5.0).unwrap().true_positives.len();
                nd += s.detections.len();
                ng += s.gt.len();
            }
            prop_assert!((last.recall - tp as f64 / ng as f64).abs() < 1e-15);
            prop_assert!((last.precision - tp as f64 / nd as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn counting_errors_are_sign_and_order_blind(gt in prop::collection::vec(0usize..100, 1..30), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred: Vec<f64> = gt.iter().map(|&g| g as f64 + rng.random_range(-10.0..10.0)).collect();
        let mirrored: Vec<f64> = gt.iter().zip(&pred).map(|(&g, p)| 2.0 * g as f64 - p).collect();
        let (mae, rmse) = counting_errors(&pred, &gt).unwrap();
        let (mae2, rmse2) = counting_errors(&mirrored, &gt).unwrap();
        prop_assert!((mae - mae2).abs() < 1e-9 && (rmse - rmse2).abs() < 1e-9);

        let mut idx: Vec<usize> = (0..gt.len()).collect();
        idx.reverse();
        idx.rotate_left(seed as usize % gt.len());
        let pp: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
        let gp: Vec<usize> = idx.iter().map(|&i| gt[i]).collect();
        let (mae3, rmse3) = counting_errors(&pp, &gp).unwrap();
        prop_assert!((mae - mae3).abs() < 1e-9 && (rmse - rmse3).abs() < 1e-9);
    }

    #[test]
    fn scenes_round_trip_through_disk((w, h) in dims(), count in 0usize..40, seed in any::<u64>()) {
        let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), w, h, count);
        let dir = tempfile::tempdir().unwrap();
        for (name, storage) in [("inline.json", ImageStorage::Inline), ("pgm.json", ImageStorage::Netpbm("img.pgm".into()))] {
            let path = dir.path().join(name);
            save_scene(&scene, &path, &storage).unwrap();
            let back = load_scene(&path).unwrap();
            prop_assert_eq!(back.count(), scene.count());
            for (a, b) in scene.heads().iter().zip(back.heads()) {
                prop_assert!((a.x - b.x).abs() <= 1e-9 && (a.y - b.y).abs() <= 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn output_shapes_follow_the_scale_maps((w, h) in dims(), seed in any::<u64>()) {
        let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), w, h, 5);
        let model = CrowdModel::build(ModelConfig::reduced(), seed).unwrap();
        let out = model.forward(scene.image()).unwrap();
        for (scale, target) in Scale::ALL.iter().zip(bin_all(&scene)) {
            prop_assert_eq!(out.map(*scale).shape(), Shape::new(1, target.rows(), target.cols()));
        }
    }

    #[test]
    fn loss_and_gradients_are_linear_in_the_weights(seed in any::<u64>(), c in 0.1f64..10.0) {
        let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), 32, 32, 6);
        let targets = bin_all(&scene);
        let mut model = CrowdModel::build(ModelConfig::reduced(), seed).unwrap();
        move_off_kinks(&mut model, seed);
        let w = [0.1, 0.2, 0.3, 0.1];
        let run = |model: &mut CrowdModel, weights: [f64; 4]| {
            model.params_mut().zero_grad();
            let (out, trace) = model.forward_trace(scene.image()).unwrap();
            let loss = total_loss(&out, &targets, &weights).unwrap();
            model.backward(&trace, &loss.grads).unwrap();
            let grads: Vec<f64> = model.params().ids().flat_map(|id| model.params().grad(id).to_vec()).collect();
            (loss.total, grads)
        };
        let (l1, g1) = run(&mut model, w);
        let (l2, g2) = run(&mut model, w.map(|x| c * x));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * b.abs().max(1.0);
        prop_assert!(close(l2, c * l1));
        for (a, b) in g2.iter().zip(&g1) {
            prop_assert!(close(*a, c * b));
        }
    }
}

fn reduced(weights: [f64; 4], seed: u64) -> CrowdModel {
    let mut model = CrowdModel::build(ModelConfig { loss_weights: weights, ..ModelConfig::reduced() }, seed).unwrap();
    move_off_kinks(&mut model, seed);
    model
}

fn small_scene(seed: u64) -> CrowdScene {
    crowdloc::scene::synth_scene(seed, 16, 16, (1, 4)).unwrap()
}

#[test]
fn full_model_passes_gradient_check_on_several_seeds() {
    for seed in 0..4 {
        let mut model = reduced([0.1, 0.2, 0.3, 0.1], seed);
        assert!(model.params().num_scalars() <= 2000);
        let report = model.gradient_check(&small_scene(seed), 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "seed {seed}: {report:?}");
    }
}

#[test]
fn dropped_term_matches_a_detached_head() {
    let scene = small_scene(9);
    for j in 0..3 {
        let mut weights = [0.1, 0.2, 0.3, 0.1];
        weights[j] = 0.0;
        let mut model = reduced(weights, 3);
        // Finite differences see the loss without term j at all; the
        // analytic gradients must agree everywhere.
        let report = model.gradient_check(&scene, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "drop L{}: {report:?}", j + 1);

        let scale = Scale::from_index(j + 1).unwrap();
        for name in model.head_param_names(scale) {
            let id = model.params().id_of(&name).unwrap();
            assert!(model.params().grad(id).iter().all(|&g| g == 0.0), "{name} received gradient");
        }
    }
}

#[test]
fn raising_tau_can_split_a_blob() {
    // One ridge with a dip: a single blob at tau 0.5, two at tau 0.7.
    let map = Tensor::from_vec(Shape::new(1, 1, 3), vec![0.9, 0.6, 0.9]).unwrap();
    assert_eq!(extract_detections(&map, 0.5, (6, 2)).unwrap().len(), 1);
    assert_eq!(extract_detections(&map, 0.7, (6, 2)).unwrap().len(), 2);
}

#[test]
fn identical_seeds_are_bit_identical() {
    let scene = small_scene(4);
    let run = || {
        let mut model = reduced([0.1, 0.2, 0.3, 0.1], 8);
        let (out, trace) = model.forward_trace(scene.image()).unwrap();
        let loss = total_loss(&out, &bin_all(&scene), &[0.1, 0.2, 0.3, 0.1]).unwrap();
        model.backward(&trace, &loss.grads).unwrap();
        crowdloc::tensornet::adam_step(model.params_mut(), &crowdloc::model::Preset::Toy.adam()).unwrap();
        model.params().ids().flat_map(|id| model.params().value(id).to_vec()).map(f64::to_bits).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

