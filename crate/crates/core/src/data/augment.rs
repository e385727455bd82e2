use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sample::Sample;

/// Geometric transforms available for augmentation. Rotations are
/// clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Identity,
    FlipHorizontal,
    FlipVertical,
    Rotate90,
    Rotate180,
    Rotate270,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    /// Subset of {90, 180, 270}.
    pub rotations: Vec<u32>,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            flip_horizontal: true,
            flip_vertical: true,
            rotations: vec![90, 180, 270],
        }
    }
}

impl AugmentationSpec {
    pub fn none() -> Self {
        AugmentationSpec {
            flip_horizontal: false,
            flip_vertical: false,
            rotations: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rotations.iter().find(|r| !matches!(r, 90 | 180 | 270)) {
            return Err(Error::InvalidArgument(format!("rotation by {r}° is not supported")));
        }
        Ok(())
    }

    /// Identity followed by every enabled transform.
    pub fn transforms(&self) -> Vec<Transform> {
        let mut out = vec![Transform::Identity];
        if self.flip_horizontal {
            out.push(Transform::FlipHorizontal);
        }
        if self.flip_vertical {
            out.push(Transform::FlipVertical);
        }
        for r in [90, 180, 270] {
            if self.rotations.contains(&r) {
                out.push(match r {
                    90 => Transform::Rotate90,
                    180 => Transform::Rotate180,
                    _ => Transform::Rotate270,
                });
            }
        }
        out
    }
}

type IndexMap = Box<dyn Fn(usize, usize) -> (usize, usize)>;

/// Source coordinate of output pixel (y, x) and the output size.
fn source_of(t: Transform, h: usize, w: usize) -> (usize, usize, IndexMap) {
    match t {
        Transform::Identity => (h, w, Box::new(|y, x| (y, x))),
        Transform::FlipHorizontal => (h, w, Box::new(move |y, x| (y, w - 1 - x))),
        Transform::FlipVertical => (h, w, Box::new(move |y, x| (h - 1 - y, x))),
        Transform::Rotate90 => (w, h, Box::new(move |y, x| (h - 1 - x, y))),
        Transform::Rotate180 => (h, w, Box::new(move |y, x| (h - 1 - y, w - 1 - x))),
        Transform::Rotate270 => (w, h, Box::new(move |y, x| (x, w - 1 - y))),
    }
}

/// Applies `t` to image and mask alike.
pub fn apply_transform(s: &Sample, t: Transform) -> Sample {
    let (oh, ow, src) = source_of(t, s.height, s.width);
    let mut image = Vec::with_capacity(s.image.len());
    let mut mask = Vec::with_capacity(s.mask.len());
    for y in 0..oh {
        for x in 0..ow {
            let (sy, sx) = src(y, x);
            let i = sy * s.width + sx;
            image.extend_from_slice(&s.image[3 * i..3 * i + 3]);
            mask.push(s.mask[i]);
        }
    }
    Sample {
        id: s.id.clone(),
        height: oh,
        width: ow,
        image,
        mask,
    }
}

/// Applies one transform drawn uniformly, by `seed`, from the identity and
/// the transforms enabled in `spec`.
pub fn augment(s: &Sample, spec: &AugmentationSpec, seed: u64) -> Result<Sample> {
    spec.validate()?;
    let choices = spec.transforms();
    let pick = ChaCha8Rng::seed_from_u64(seed).random_range(0..choices.len());
    Ok(apply_transform(s, choices[pick]))
}
