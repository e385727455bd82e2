//! Saliency evaluation: precision/recall, P-R curves, F-measure, MAE and
//! S-measure, with per-dataset aggregation.

mod maps;
mod pr;
mod report;
mod smeasure;

pub use maps::{GroundTruth, SaliencyMap, MASK_THRESHOLD};
pub use pr::{
    adaptive_threshold, curve_threshold, f_measure, mae, pr_curve, precision_recall, PrPoint, BETA_SQUARED,
    NUM_THRESHOLDS,
};
pub use report::{
    evaluate_dataset, evaluate_pairs, image_metrics, read_pr_csv, write_pr_csv, EvalReport, ImageMetrics, MeanMetrics,
};
pub use smeasure::{s_measure, S_ALPHA};
