use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::maps::{check_same_shape, GroundTruth, SaliencyMap};

/// Weight of precision relative to recall in the F-measure.
pub const BETA_SQUARED: f64 = 0.3;

/// Number of binarization thresholds in a P-R curve, at k/255.
pub const NUM_THRESHOLDS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Threshold k of a P-R curve.
pub fn curve_threshold(k: usize) -> f64 {
    k as f64 / 255.0
}

fn require_foreground(gt: &GroundTruth) -> Result<usize> {
    match gt.foreground_count() {
        0 => Err(Error::InvalidArgument("ground truth has no foreground pixels".into())),
        n => Ok(n),
    }
}

fn ratios(tp: usize, predicted: usize, positives: usize) -> (f64, f64) {
    // An empty prediction is taken as perfectly precise.
    let precision = if predicted == 0 {
        1.0
    } else {
        tp as f64 / predicted as f64
    };
    (precision, tp as f64 / positives as f64)
}

/// Precision and recall of `s ≥ threshold` against `gt`.
pub fn precision_recall(s: &SaliencyMap, gt: &GroundTruth, threshold: f64) -> Result<(f64, f64)> {
    check_same_shape(s, gt)?;
    let positives = require_foreground(gt)?;
    let mut tp = 0;
    let mut predicted = 0;
    for (&v, &g) in s.values().iter().zip(gt.values()) {
        if v >= threshold {
            predicted += 1;
            tp += g as usize;
        }
    }
    Ok(ratios(tp, predicted, positives))
}

/// Precision and recall at every threshold k/255, k = 0..=255.
pub fn pr_curve(s: &SaliencyMap, gt: &GroundTruth) -> Result<Vec<PrPoint>> {
    check_same_shape(s, gt)?;
    let positives = require_foreground(gt)?;
    let mut fg = Vec::with_capacity(positives);
    let mut bg = Vec::with_capacity(gt.values().len() - positives);
    for (&v, &g) in s.values().iter().zip(gt.values()) {
        if g {
            fg.push(v);
        } else {
            bg.push(v);
        }
    }
    fg.sort_by(f64::total_cmp);
    bg.sort_by(f64::total_cmp);
    let at_least = |sorted: &[f64], t: f64| sorted.len() - sorted.partition_point(|&v| v < t);
    Ok((0..NUM_THRESHOLDS)
        .map(|k| {
            let threshold = curve_threshold(k);
            let tp = at_least(&fg, threshold);
            let (precision, recall) = ratios(tp, tp + at_least(&bg, threshold), positives);
            PrPoint {
                threshold,
                precision,
                recall,
            }
        })
        .collect())
}

/// Weighted harmonic mean of precision and recall; 0 when both vanish.
pub fn f_measure(precision: f64, recall: f64, beta_squared: f64) -> f64 {
    let denom = beta_squared * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + beta_squared) * precision * recall / denom
    }
}

/// Image-dependent threshold: twice the mean saliency, capped at 1.
pub fn adaptive_threshold(s: &SaliencyMap) -> f64 {
    (2.0 * s.mean()).min(1.0)
}

/// Mean absolute difference between the map and the binary mask.
pub fn mae(s: &SaliencyMap, gt: &GroundTruth) -> Result<f64> {
    check_same_shape(s, gt)?;
    let total: f64 = s
        .values()
        .iter()
        .zip(gt.values())
        .map(|(&v, &g)| (v - if g { 1.0 } else { 0.0 }).abs())
        .sum();
    Ok(total / s.values().len() as f64)
}
