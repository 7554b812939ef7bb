use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{average_precision, counting_errors, density_groups, density_groups_svg, pr_curve_svg, PrPoint, SceneDetections};
use crate::error::{invalid, Result};
use crate::localize::{detections_csv_rows, extract_detections, Detection, DETECTIONS_CSV_HEADER};
use crate::model::CrowdModel;
use crate::scene::CrowdScene;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub tau: f64,
    pub radius: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            tau: crate::localize::DEFAULT_TAU,
            radius: super::DEFAULT_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneRecord {
    pub id: String,
    pub gt: usize,
    /// Sum of the S1, S2, S3 head maps and of the fused S4 map.
    pub counts: [f64; 4],
    #[serde(skip)]
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub group: usize,
    pub scenes: usize,
    /// Count MAE of each scale within the group, S1..S4.
    pub mae: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub num_scenes: usize,
    pub tau: f64,
    pub radius: f64,
    /// Fused-count mean absolute error.
    pub mae: f64,
    /// Fused-count root mean squared error.
    pub mse: f64,
    pub ap: f64,
    pub pr_curve: Vec<PrPoint>,
    /// S1..S4 count MAE over all scenes.
    pub per_scale_mae: [f64; 4],
    pub density_groups: Vec<GroupReport>,
    pub per_scene: Vec<SceneRecord>,
}

fn scale_mae(records: &[&SceneRecord]) -> [f64; 4] {
    let n = records.len() as f64;
    std::array::from_fn(|j| records.iter().map(|r| (r.counts[j] - r.gt as f64).abs()).sum::<f64>() / n)
}

/// Runs the model over `scenes` and computes every counting and
/// localization statistic.
pub fn per_scale_report(model: &CrowdModel, scenes: &[CrowdScene], opts: &EvalOptions) -> Result<EvalReport> {
    if scenes.is_empty() {
        return Err(invalid!("evaluation needs at least one scene"));
    }
    let mut per_scene = Vec::with_capacity(scenes.len());
    for s in scenes {
        let out = model.forward(s.image())?;
        let detections = extract_detections(&out.head_maps[2], opts.tau, (s.width(), s.height()))?;
        per_scene.push(SceneRecord {
            id: s.id().to_string(),
            gt: s.count(),
            counts: out.scale_counts(),
            detections,
        });
    }
    let fused: Vec<f64> = per_scene.iter().map(|r| r.counts[3]).collect();
    let gts: Vec<usize> = per_scene.iter().map(|r| r.gt).collect();
    let (mae, mse) = counting_errors(&fused, &gts)?;

    let pool: Vec<SceneDetections> = per_scene
        .iter()
        .zip(scenes)
        .map(|(r, s)| SceneDetections {
            detections: r.detections.clone(),
            gt: s.heads().to_vec(),
        })
        .collect();
    let total_gt: usize = gts.iter().sum();
    let (ap, pr_curve) = if total_gt == 0 {
        (0.0, Vec::new())
    } else {
        let r = average_precision(&pool, opts.radius)?;
        (r.ap, r.curve)
    };

    let keyed: Vec<(&str, usize)> = per_scene.iter().map(|r| (r.id.as_str(), r.gt)).collect();
    let groups = density_groups(&keyed)?
        .into_iter()
        .map(|g| {
            let members: Vec<&SceneRecord> = g.members.iter().map(|&i| &per_scene[i]).collect();
            GroupReport {
                group: g.group,
                scenes: members.len(),
                mae: scale_mae(&members),
            }
        })
        .collect();
    let all: Vec<&SceneRecord> = per_scene.iter().collect();
    Ok(EvalReport {
        num_scenes: scenes.len(),
        tau: opts.tau,
        radius: opts.radius,
        mae,
        mse,
        ap,
        pr_curve,
        per_scale_mae: scale_mae(&all),
        density_groups: groups,
        per_scene,
    })
}

impl EvalReport {
    pub fn metrics_csv(&self) -> String {
        format!("mae,mse,ap\n{:.8},{:.8},{:.8}\n", self.mae, self.mse, self.ap)
    }

    pub fn pr_curve_csv(&self) -> String {
        let mut s = String::from("threshold,recall,precision\n");
        for p in &self.pr_curve {
            let _ = writeln!(s, "{:.8},{:.8},{:.8}", p.threshold, p.recall, p.precision);
        }
        s
    }

    /// `mae_s4` and `mae_fused` are the same column: S4 is the fused map.
    pub fn density_groups_csv(&self) -> String {
        let mut s = String::from("group,scenes,mae_s1,mae_s2,mae_s3,mae_s4,mae_fused\n");
        for g in &self.density_groups {
            let _ = writeln!(
                s,
                "{},{},{:.8},{:.8},{:.8},{:.8},{:.8}",
                g.group, g.scenes, g.mae[0], g.mae[1], g.mae[2], g.mae[3], g.mae[3]
            );
        }
        s
    }

    pub fn per_scene_csv(&self) -> String {
        let mut s = String::from("scene_id,gt,count_s1,count_s2,count_s3,count_fused,detections\n");
        for r in &self.per_scene {
            let _ = writeln!(
                s,
                "{},{},{:.8},{:.8},{:.8},{:.8},{}",
                r.id,
                r.gt,
                r.counts[0],
                r.counts[1],
                r.counts[2],
                r.counts[3],
                r.detections.len()
            );
        }
        s
    }

    pub fn detections_csv(&self) -> String {
        let mut s = format!("{DETECTIONS_CSV_HEADER}\n");
        for r in &self.per_scene {
            detections_csv_rows(&r.id, &r.detections, &mut s);
        }
        s
    }

    /// Writes `report.json`, the CSV tables and the two SVG plots into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(dir.join("report.json"), e))?;
        let files = [
            ("report.json", json + "\n"),
            ("metrics.csv", self.metrics_csv()),
            ("pr_curve.csv", self.pr_curve_csv()),
            ("density_groups.csv", self.density_groups_csv()),
            ("per_scene.csv", self.per_scene_csv()),
            ("detections.csv", self.detections_csv()),
            ("pr_curve.svg", pr_curve_svg(&self.pr_curve, self.ap)),
            ("density_groups.svg", density_groups_svg(&self.density_groups)),
        ];
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
