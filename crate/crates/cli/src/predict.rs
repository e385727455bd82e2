use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pdfnet_core::data::resize_bilinear;
use pdfnet_core::training::load_checkpoint;
use pdfnet_core::{build_variant, model_forward, Model, ParamStore, Shape, Tensor, Variant};

use crate::manifest::ManifestBuilder;

/// Saliency in [0, 1] to a gray level, rounding halves up.
pub fn quantize(s: f32) -> u8 {
    (s.clamp(0.0, 1.0) as f64 * 255.0 + 0.5).floor() as u8
}

/// Image files of a directory in stem order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg" | "bmp"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Network-size saliency map for one RGB image.
pub fn predict_image(model: &Model, params: &ParamStore<f32>, img: &image::RgbImage) -> Result<Vec<u8>> {
    let (h, w) = model.config().input_size;
    let (iw, ih) = img.dimensions();
    let raw: Vec<f32> = img.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
    let data = if (ih as usize, iw as usize) == (h, w) {
        raw
    } else {
        resize_bilinear(&raw, ih as usize, iw as usize, 3, h, w)
    };
    let x = Tensor::from_vec(Shape::new(1, h, w, 3), data)?;
    let out = model_forward(model, params, &x)?;
    Ok(out.data().iter().map(|&s| quantize(s)).collect())
}

pub struct PredictSummary {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
}

pub fn cmd_predict(
    checkpoint: &Path,
    input: &Path,
    out_dir: &Path,
    expected_variant: Option<Variant>,
) -> Result<PredictSummary> {
    let ckpt = load_checkpoint(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let mut config = ckpt.config().clone();
    if let Some(v) = expected_variant {
        config.variant = v;
    }
    let params = ckpt.params_for(&config)?;
    let model = build_variant(&config)?;
    let (h, w) = config.input_size;
    let mut out = ManifestBuilder::new(out_dir, "predict");
    let mut summary = PredictSummary {
        written: Vec::new(),
        skipped: Vec::new(),
    };
    for path in list_images(input)? {
        let img = match image::open(&path) {
            Ok(img) => img.into_rgb8(),
            Err(e) => {
                log::warn!("skipping unreadable image {}: {e}", path.display());
                summary.skipped.push(path);
                continue;
            }
        };
        let gray = predict_image(&model, params, &img)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .context("image without a file name")?;
        let target = out.artifact(format!("{stem}.png"))?;
        image::GrayImage::from_raw(w as u32, h as u32, gray)
            .context("prediction buffer does not match the network size")?
            .save(&target)
            .with_context(|| format!("writing {}", target.display()))?;
        summary.written.push(target);
    }
    if summary.written.is_empty() {
        bail!("no readable images in {}", input.display());
    }
    out.finish()?;
    Ok(summary)
}
