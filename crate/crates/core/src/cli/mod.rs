//! Library side of the `crowdloc` command-line tool. Each subcommand is a
//! plain function over a [`RunConfig`] so it can be driven from tests and
//! examples without spawning a process.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{RunConfig, SynthConfig};

use crate::error::{invalid, Result};
use crate::evalkit::{per_scale_report, EvalReport};
use crate::localize::{detections_csv_rows, extract_detections, DETECTIONS_CSV_HEADER};
use crate::model::{train, CrowdModel, TrainLog};
use crate::scalemap::Scale;
use crate::scene::{load_dataset, load_scene, save_dataset, synth_scene, CrowdScene, Manifest};
use crate::Error;

pub const MODEL_CONFIG_FILE: &str = "model.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.pcn";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const ABLATION_CSV_HEADER: &str = "l1,l2,l3,mae,mse";

/// Process exit code for an error: 1 for bad input, 2 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        1
    } else {
        2
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Seed of the `i`-th synthetic scene.
pub fn scene_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

/// Generates `n_scenes` synthetic scenes and splits them train/test.
pub fn synth_scenes(cfg: &RunConfig) -> Result<(Vec<CrowdScene>, Vec<CrowdScene>)> {
    let s = &cfg.synth;
    let range = (s.count_range[0], s.count_range[1]);
    let mut scenes = (0..s.n_scenes)
        .map(|i| Ok(synth_scene(scene_seed(cfg.seed, i), s.width, s.height, range)?.with_id(format!("scene_{i:04}"))))
        .collect::<Result<Vec<_>>>()?;
    let n_train = (s.n_scenes as f64 * s.train_fraction).round() as usize;
    let test = scenes.split_off(n_train);
    Ok((scenes, test))
}

/// `synth`: writes a dataset directory to `cfg.out`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let (train, test) = synth_scenes(cfg)?;
    save_dataset(&cfg.out, &train, &test)
}

/// Splits the tail of the train split off for validation.
pub fn split_validation(train: &[CrowdScene], fraction: f64) -> (&[CrowdScene], &[CrowdScene]) {
    let mut n_val = (train.len() as f64 * fraction).round() as usize;
    if n_val == 0 && fraction > 0.0 && train.len() >= 2 {
        n_val = 1;
    }
    train.split_at(train.len() - n_val.min(train.len()))
}

/// Trains a fresh model on `train` scenes and writes model.json,
/// checkpoint.pcn and train_log.csv into `out`. On divergence the
/// last good parameters are still written before the error is returned.
pub fn train_model(cfg: &RunConfig, scenes: &[CrowdScene], out: &Path) -> Result<(CrowdModel, TrainLog)> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(invalid!("train split is empty"));
    }
    create_dir(out)?;
    let (fit, val) = split_validation(scenes, cfg.val_fraction);
    let mut model = CrowdModel::build(cfg.model_config(), cfg.seed)?;
    let result = train(&mut model, fit, val, &cfg.train_config());
    model.save(out.join(MODEL_CONFIG_FILE), out.join(CHECKPOINT_FILE))?;
    let log = result?;
    write_file(&out.join(TRAIN_LOG_FILE), &log.to_csv())?;
    Ok((model, log))
}

/// `train`: reads the dataset, trains, and writes artifacts to `cfg.out`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainLog> {
    let data = load_dataset(cfg.dataset()?)?;
    train_model(cfg, &data.train, &cfg.out).map(|(_, log)| log)
}

/// Accepts either a checkpoint file or the directory holding one; the
/// model config is expected alongside.
pub fn load_model(checkpoint: &Path) -> Result<CrowdModel> {
    let ckpt: PathBuf = if checkpoint.is_dir() {
        checkpoint.join(CHECKPOINT_FILE)
    } else {
        checkpoint.to_path_buf()
    };
    let dir = ckpt.parent().unwrap_or(Path::new("."));
    CrowdModel::load(dir.join(MODEL_CONFIG_FILE), &ckpt)
}

fn checkpoint_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.checkpoint
        .as_deref()
        .ok_or_else(|| invalid!("no checkpoint given (use --checkpoint or the config's \"checkpoint\")"))
}

/// `eval`: scores the test split and writes the report bundle to `cfg.out`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let model = load_model(checkpoint_path(cfg)?)?;
    let data = load_dataset(cfg.dataset()?)?;
    let report = per_scale_report(&model, &data.test, &cfg.eval_options())?;
    report.write_to(&cfg.out)?;
    Ok(report)
}

/// Detections CSV for `scenes` at threshold `tau`.
pub fn localize_scenes(model: &CrowdModel, scenes: &[CrowdScene], tau: f64) -> Result<String> {
    let mut csv = format!("{DETECTIONS_CSV_HEADER}\n");
    for scene in scenes {
        let out = model.forward(scene.image())?;
        let dets = extract_detections(out.map(Scale::S3), tau, (scene.width(), scene.height()))?;
        detections_csv_rows(scene.id(), &dets, &mut csv);
    }
    Ok(csv)
}

/// `localize`: writes detections.csv for the given annotation files, or for
/// the dataset's test split when none are given.
pub fn cmd_localize(cfg: &RunConfig, scene_files: &[PathBuf]) -> Result<PathBuf> {
    cfg.validate()?;
    let model = load_model(checkpoint_path(cfg)?)?;
    let scenes = if scene_files.is_empty() {
        load_dataset(cfg.dataset()?)?.test
    } else {
        scene_files.iter().map(load_scene).collect::<Result<Vec<_>>>()?
    };
    let csv = localize_scenes(&model, &scenes, cfg.tau)?;
    create_dir(&cfg.out)?;
    let path = cfg.out.join("detections.csv");
    write_file(&path, &csv)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub run: String,
    /// Effective L1..L3 weights (0 when dropped).
    pub weights: [f64; 3],
    pub mae: f64,
    pub mse: f64,
}

/// Ablation runs in table order: drop L1, drop L2, drop L3, all on.
pub const ABLATION_MASKS: [(&str, [bool; 3]); 4] = [
    ("drop_l1", [false, true, true]),
    ("drop_l2", [true, false, true]),
    ("drop_l3", [true, true, false]),
    ("all", [true, true, true]),
];

/// One row per run: the effective L1..L3 weights (0 marks a dropped term),
/// then test MAE and RMSE.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = format!("{ABLATION_CSV_HEADER}\n");
    for r in rows {
        s += &format!(
            "{},{},{},{:.8},{:.8}\n",
            r.weights[0], r.weights[1], r.weights[2], r.mae, r.mse
        );
    }
    s
}

/// Train on `train`, evaluate on `test`, writing everything under `out`.
pub fn train_and_eval(cfg: &RunConfig, train: &[CrowdScene], test: &[CrowdScene], out: &Path) -> Result<EvalReport> {
    let (model, _) = train_model(cfg, train, out)?;
    let report = per_scale_report(&model, test, &cfg.eval_options())?;
    report.write_to(out)?;
    Ok(report)
}

/// `ablate`: four train+eval runs, each in its own subdirectory of
/// `cfg.out`, summarized in ablation.csv.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let data = load_dataset(cfg.dataset()?)?;
    let mut rows = Vec::with_capacity(ABLATION_MASKS.len());
    for (run, mask) in ABLATION_MASKS {
        let run_cfg = RunConfig {
            ablation: mask,
            ..cfg.clone()
        };
        let report = train_and_eval(&run_cfg, &data.train, &data.test, &cfg.out.join(run))?;
        let w = run_cfg.effective_weights();
        rows.push(AblationRow {
            run: run.to_string(),
            weights: [w[0], w[1], w[2]],
            mae: report.mae,
            mse: report.mse,
        });
    }
    write_file(&cfg.out.join(ABLATION_FILE), &ablation_csv(&rows))?;
    Ok(rows)
}
