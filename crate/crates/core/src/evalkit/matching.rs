use crate::error::{invalid, Result};
use crate::localize::Detection;
use crate::scene::HeadPoint;

/// Matching radius in pixels; a detection exactly this far away still matches.
pub const DEFAULT_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    /// (detection index, gt index, distance).
    pub true_positives: Vec<(usize, usize, f64)>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
}

/// Walks detections in (descending) score order; each claims the nearest
/// unclaimed ground-truth point within `radius`, which is then removed.
/// Ties in distance go to the lower gt index.
pub fn greedy_match(detections: &[Detection], gt: &[HeadPoint], radius: f64) -> Result<MatchResult> {
    if !(radius > 0.0) {
        return Err(invalid!("matching radius must be positive, got {radius}"));
    }
    if detections.windows(2).any(|w| w[0].score < w[1].score) {
        return Err(invalid!("detections must be sorted by descending score"));
    }
    let mut taken = vec![false; gt.len()];
    let mut result = MatchResult::default();
    for (di, d) in detections.iter().enumerate() {
        let nearest = gt
            .iter()
            .enumerate()
            .filter(|(gi, _)| !taken[*gi])
            .map(|(gi, g)| (gi, g.distance(d.x, d.y)))
            .filter(|&(_, dist)| dist <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((gi, dist)) => {
                taken[gi] = true;
                result.true_positives.push((di, gi, dist));
            }
            None => result.false_positives.push(di),
        }
    }
    result.false_negatives = (0..gt.len()).filter(|&g| !taken[g]).collect();
    Ok(result)
}

/// One scene's score-sorted detections and its annotations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneDetections {
    pub detections: Vec<Detection>,
    pub gt: Vec<HeadPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ApResult {
    pub ap: f64,
    pub curve: Vec<PrPoint>,
}

/// Sweeps every distinct score over the pooled detections of all scenes
/// (highest first). At threshold `t` each scene keeps its detections with
/// score `>= t`; because matching is greedy in score order, a detection's
/// outcome does not depend on lower-scored ones, so one full match per
/// scene yields every operating point. AP is the trapezoidal area under
/// recall/precision starting from `(0, first precision)`.
pub fn average_precision(scenes: &[SceneDetections], radius: f64) -> Result<ApResult> {
    let total_gt: usize = scenes.iter().map(|s| s.gt.len()).sum();
    if total_gt == 0 {
        return Err(invalid!("average precision is undefined without ground truth"));
    }
    let mut pooled: Vec<(f64, bool)> = Vec::new();
    for s in scenes {
        let m = greedy_match(&s.detections, &s.gt, radius)?;
        let mut is_tp = vec![false; s.detections.len()];
        for &(d, _, _) in &m.true_positives {
            is_tp[d] = true;
        }
        pooled.extend(s.detections.iter().zip(is_tp).map(|(d, tp)| (d.score, tp)));
    }
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut curve = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == t {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push(PrPoint {
            threshold: t,
            recall: tp as f64 / total_gt as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(ApResult {
        ap: trapezoid_area(&curve),
        curve,
    })
}

pub(crate) fn trapezoid_area(curve: &[PrPoint]) -> f64 {
    let Some(first) = curve.first() else {
        return 0.0;
    };
    let (mut r0, mut p0) = (0.0, first.precision);
    let mut area = 0.0;
    for p in curve {
        area += (p.recall - r0) * (p.precision + p0) / 2.0;
        (r0, p0) = (p.recall, p.precision);
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64, y: f64, score: f64) -> Detection {
        Detection {
            x,
            y,
            score,
            blob_size: 1,
        }
    }

    #[test]
    fn radius_is_inclusive() {
        let m = greedy_match(&[det(3.0, 4.0, 1.0)], &[HeadPoint::new(0.0, 0.0)], 5.0).unwrap();
        assert_eq!(m.true_positives, vec![(0, 0, 5.0)]);
        let m = greedy_match(&[det(3.0, 4.01, 1.0)], &[HeadPoint::new(0.0, 0.0)], 5.0).unwrap();
        assert_eq!(m.false_positives, vec![0]);
    }

    #[test]
    fn no_detections_all_false_negatives() {
        let gt = [HeadPoint::new(1.0, 1.0), HeadPoint::new(9.0, 9.0), HeadPoint::new(20.0, 1.0)];
        let m = greedy_match(&[], &gt, 5.0).unwrap();
        assert_eq!(m.false_negatives, vec![0, 1, 2]);
    }

    #[test]
    fn matched_points_are_deleted() {
        let gt = [HeadPoint::new(10.0, 10.0)];
        let m = greedy_match(&[det(11.0, 10.0, 0.9), det(10.0, 10.0, 0.5)], &gt, 5.0).unwrap();
        assert_eq!(m.true_positives.len(), 1);
        assert_eq!(m.true_positives[0].0, 0);
        assert_eq!(m.false_positives, vec![1]);
    }

    #[test]
    fn nearest_remaining_is_chosen() {
        let gt = [HeadPoint::new(0.0, 0.0), HeadPoint::new(2.0, 0.0)];
        let m = greedy_match(&[det(1.5, 0.0, 1.0), det(1.0, 0.0, 0.5)], &gt, 5.0).unwrap();
        assert_eq!(m.true_positives[0].1, 1);
        assert_eq!(m.true_positives[1].1, 0);
    }

    #[test]
    fn rejects_unsorted_and_bad_radius() {
        assert!(greedy_match(&[det(0.0, 0.0, 0.1), det(0.0, 0.0, 0.2)], &[], 5.0).is_err());
        assert!(greedy_match(&[], &[], 0.0).is_err());
        assert!(greedy_match(&[], &[], f64::NAN).is_err());
    }

    #[test]
    fn perfect_and_hopeless_detectors() {
        let gt = vec![HeadPoint::new(5.0, 5.0), HeadPoint::new(30.0, 30.0)];
        let perfect = SceneDetections {
            detections: vec![det(5.0, 5.0, 0.9), det(30.0, 30.0, 0.3)],
            gt: gt.clone(),
        };
        assert_eq!(average_precision(&[perfect], 5.0).unwrap().ap, 1.0);
        let far = SceneDetections {
            detections: vec![det(50.0, 5.0, 0.9), det(5.0, 50.0, 0.9)],
            gt: gt.clone(),
        };
        assert_eq!(average_precision(&[far], 5.0).unwrap().ap, 0.0);
        let none = SceneDetections {
            detections: vec![],
            gt,
        };
        let r = average_precision(&[none], 5.0).unwrap();
        assert_eq!(r.ap, 0.0);
        assert!(r.curve.is_empty());
        assert!(average_precision(&[SceneDetections::default()], 5.0).is_err());
    }

    #[test]
    fn worked_curve() {
        // TP (1.0), FP (0.8), TP (0.5) against 4 gt
        let gt = vec![
            HeadPoint::new(0.0, 0.0),
            HeadPoint::new(20.0, 0.0),
            HeadPoint::new(40.0, 0.0),
            HeadPoint::new(60.0, 0.0),
        ];
        let s = SceneDetections {
            detections: vec![det(0.0, 0.0, 1.0), det(10.0, 30.0, 0.8), det(20.0, 1.0, 0.5)],
            gt,
        };
        let r = average_precision(&[s], 5.0).unwrap();
        let pts: Vec<(f64, f64)> = r.curve.iter().map(|p| (p.recall, p.precision)).collect();
        assert_eq!(pts, vec![(0.25, 1.0), (0.25, 0.5), (0.5, 2.0 / 3.0)]);
        let want = 0.25 * 1.0 + 0.25 * (0.5 + 2.0 / 3.0) / 2.0;
        assert!((r.ap - want).abs() < 1e-15);
    }
}
