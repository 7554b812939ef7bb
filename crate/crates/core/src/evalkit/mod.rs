//! Counting and localization metrics.
//!
//! "MSE" follows the crowd-counting convention and is the *root* mean
//! squared count error. Localization uses greedy one-to-one matching within
//! a pixel radius and trapezoidal average precision over a global score
//! sweep.

mod counting;
mod groups;
mod matching;
mod report;
mod svg;

pub use counting::counting_errors;
pub use groups::{density_groups, DensityGroup, NUM_DENSITY_GROUPS};
pub use matching::{average_precision, greedy_match, ApResult, MatchResult, PrPoint, SceneDetections, DEFAULT_RADIUS};
pub use report::{per_scale_report, EvalOptions, EvalReport, GroupReport, SceneRecord};
pub use svg::{density_groups_svg, pr_curve_svg};
