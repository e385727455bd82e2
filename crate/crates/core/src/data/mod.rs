//! Datasets: loading, resizing, augmentation, batching and a synthetic
//! corpus.
//!
//! On disk a split is laid out as `<root>/<split>/images/*.{png,jpg}` with
//! masks in `<root>/<split>/GT/*.png`, paired by file stem. Images are
//! scaled to [0, 1] by 1/255; masks are binarized at 128.

mod augment;
mod batch;
mod sample;
mod synthetic;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub use augment::{apply_transform, augment, AugmentationSpec, Transform};
pub use batch::{batch_iter, endless_batches, epoch_batches, epoch_order, Batches};
pub use sample::{resize_bilinear, resize_sample, to_tensors, Sample};
pub use synthetic::make_synthetic_corpus;

use crate::error::{Error, Result};
use crate::metrics::MASK_THRESHOLD;

/// Samples of one split plus the stems that could not be paired.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub unpaired: Vec<String>,
}

fn files_by_stem(dir: &Path, exts: &[&str]) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| exts.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path.clone());
        }
    }
    Ok(out)
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads one image/mask pair from disk.
pub fn load_pair(id: &str, image_path: &Path, mask_path: &Path) -> Result<Sample> {
    let img = open(image_path)?.into_rgb8();
    let mask = open(mask_path)?.into_luma8();
    if img.dimensions() != mask.dimensions() {
        return Err(Error::Data(format!(
            "{id}: image is {:?} but mask is {:?}",
            img.dimensions(),
            mask.dimensions()
        )));
    }
    let (w, h) = img.dimensions();
    Sample::new(
        id,
        h as usize,
        w as usize,
        img.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        mask.as_raw().iter().map(|&v| (v >= MASK_THRESHOLD) as u8).collect(),
    )
}

/// Loads every image/mask pair of `split` in lexicographic stem order.
/// Files without a partner are skipped with a warning.
pub fn load_dataset(root: &Path, split: &str) -> Result<Dataset> {
    let base = root.join(split);
    let images = files_by_stem(&base.join("images"), &["png", "jpg", "jpeg"])?;
    let masks = files_by_stem(&base.join("GT"), &["png"])?;
    let mut samples = Vec::new();
    let mut unpaired = Vec::new();
    for (stem, image_path) in &images {
        match masks.get(stem) {
            Some(mask_path) => samples.push(load_pair(stem, image_path, mask_path)?),
            None => {
                log::warn!("{stem}: image has no mask, skipped");
                unpaired.push(stem.clone());
            }
        }
    }
    for stem in masks.keys().filter(|s| !images.contains_key(*s)) {
        log::warn!("{stem}: mask has no image, skipped");
        unpaired.push(stem.clone());
    }
    unpaired.sort();
    if samples.is_empty() {
        return Err(Error::Data(format!("no image/mask pairs under {}", base.display())));
    }
    Ok(Dataset { samples, unpaired })
}
