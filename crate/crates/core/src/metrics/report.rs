use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::maps::{GroundTruth, SaliencyMap};
use super::pr::{
    adaptive_threshold, f_measure, mae, pr_curve, precision_recall, PrPoint, BETA_SQUARED, NUM_THRESHOLDS,
};
use super::smeasure::s_measure;

/// Scores of one image. Precision, recall and F use the adaptive threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub id: String,
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub mae: f64,
    pub s_measure: f64,
}

/// Arithmetic means over the evaluated images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub images: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub mae: f64,
    pub s_measure: f64,
    /// Largest F over the thresholds of the mean P-R curve.
    pub max_f_beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean: MeanMetrics,
    pub images: Vec<ImageMetrics>,
    /// Per-threshold precision and recall averaged over images.
    pub pr_curve: Vec<PrPoint>,
    /// Images left out because their mask has no foreground.
    pub skipped: Vec<String>,
    /// Files present in only one of the two directories.
    pub unmatched: Vec<String>,
}

pub fn image_metrics(id: &str, s: &SaliencyMap, gt: &GroundTruth) -> Result<ImageMetrics> {
    let threshold = adaptive_threshold(s);
    let (precision, recall) = precision_recall(s, gt, threshold)?;
    Ok(ImageMetrics {
        id: id.to_string(),
        threshold,
        precision,
        recall,
        f_beta: f_measure(precision, recall, BETA_SQUARED),
        mae: mae(s, gt)?,
        s_measure: s_measure(s, gt)?,
    })
}

/// Scores every pair and averages in id order. Pairs whose mask has no
/// foreground are skipped with a warning.
pub fn evaluate_pairs<I>(pairs: I) -> Result<EvalReport>
where
    I: IntoIterator<Item = (String, SaliencyMap, GroundTruth)>,
{
    let mut pairs: Vec<_> = pairs.into_iter().collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    let mut curve_sum = vec![(0.0, 0.0); NUM_THRESHOLDS];
    for (id, s, gt) in &pairs {
        if gt.foreground_count() == 0 {
            log::warn!("skipping {id}: ground truth has no foreground");
            skipped.push(id.clone());
            continue;
        }
        images.push(image_metrics(id, s, gt)?);
        for (acc, pt) in curve_sum.iter_mut().zip(pr_curve(s, gt)?) {
            acc.0 += pt.precision;
            acc.1 += pt.recall;
        }
    }
    if images.is_empty() {
        return Err(Error::Data("no image with foreground to evaluate".into()));
    }
    let n = images.len() as f64;
    let avg = |f: fn(&ImageMetrics) -> f64| images.iter().map(f).sum::<f64>() / n;
    let pr_curve: Vec<PrPoint> = curve_sum
        .iter()
        .enumerate()
        .map(|(k, &(p, r))| PrPoint {
            threshold: super::pr::curve_threshold(k),
            precision: p / n,
            recall: r / n,
        })
        .collect();
    let max_f_beta = pr_curve
        .iter()
        .map(|pt| f_measure(pt.precision, pt.recall, BETA_SQUARED))
        .fold(0.0, f64::max);
    Ok(EvalReport {
        mean: MeanMetrics {
            images: images.len(),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f_beta: avg(|m| m.f_beta),
            mae: avg(|m| m.mae),
            s_measure: avg(|m| m.s_measure),
            max_f_beta,
        },
        images,
        pr_curve,
        skipped,
        unmatched: Vec::new(),
    })
}

fn image_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg" | "bmp")) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path.clone());
        }
    }
    Ok(out)
}

fn read_gray(path: &Path) -> Result<image::GrayImage> {
    Ok(image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .into_luma8())
}

/// Evaluates prediction images against masks matched by file stem.
/// Predictions of a different size are resampled bilinearly to the mask size.
pub fn evaluate_dataset(pred_dir: &Path, gt_dir: &Path) -> Result<EvalReport> {
    let preds = image_files(pred_dir)?;
    let gts = image_files(gt_dir)?;
    let mut unmatched = Vec::new();
    let mut pairs = Vec::new();
    for (id, gt_path) in &gts {
        let Some(pred_path) = preds.get(id) else {
            log::warn!("no prediction for {id}");
            unmatched.push(id.clone());
            continue;
        };
        let gt_img = read_gray(gt_path)?;
        let (w, h) = gt_img.dimensions();
        let mut pred_img = read_gray(pred_path)?;
        if pred_img.dimensions() != (w, h) {
            log::warn!(
                "resizing prediction {id} from {:?} to {:?}",
                pred_img.dimensions(),
                (w, h)
            );
            pred_img = image::imageops::resize(&pred_img, w, h, image::imageops::FilterType::Triangle);
        }
        let gt = GroundTruth::from_gray8(h as usize, w as usize, gt_img.as_raw())?;
        let s = SaliencyMap::from_gray8(h as usize, w as usize, pred_img.as_raw())?;
        pairs.push((id.clone(), s, gt));
    }
    for id in preds.keys().filter(|id| !gts.contains_key(*id)) {
        log::warn!("no ground truth for {id}");
        unmatched.push(id.clone());
    }
    unmatched.sort();
    let mut report = evaluate_pairs(pairs)?;
    report.unmatched = unmatched;
    Ok(report)
}

impl EvalReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// One row per image and a final `mean` row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "threshold", "precision", "recall", "f_beta", "mae", "s_measure"])?;
        for m in &self.images {
            w.write_record([
                m.id.clone(),
                m.threshold.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f_beta.to_string(),
                m.mae.to_string(),
                m.s_measure.to_string(),
            ])?;
        }
        let mean = &self.mean;
        w.write_record([
            "mean".to_string(),
            String::new(),
            mean.precision.to_string(),
            mean.recall.to_string(),
            mean.f_beta.to_string(),
            mean.mae.to_string(),
            mean.s_measure.to_string(),
        ])?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_pr_csv(&self, path: &Path) -> Result<()> {
        write_pr_csv(&self.pr_curve, path)
    }
}

pub fn write_pr_csv(curve: &[PrPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for pt in curve {
        w.serialize(pt)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pr_csv(path: &Path) -> Result<Vec<PrPoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let pts = r.deserialize().collect::<std::result::Result<Vec<PrPoint>, _>>()?;
    if pts.is_empty() {
        return Err(Error::Data(format!("{} holds no P-R points", path.display())));
    }
    Ok(pts)
}
