use crate::error::{Error, Result};
use crate::model::SIZE_MULTIPLE;
use crate::ops::bilinear_axis;
use crate::tensor::{Shape, Tensor};

/// An RGB image with its binary saliency mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub height: usize,
    pub width: usize,
    /// Row-major H×W×3, values in [0, 1].
    pub image: Vec<f32>,
    /// Row-major H×W, values 0 or 1.
    pub mask: Vec<u8>,
}

impl Sample {
    pub fn new(id: impl Into<String>, height: usize, width: usize, image: Vec<f32>, mask: Vec<u8>) -> Result<Self> {
        let s = Sample {
            id: id.into(),
            height,
            width,
            image,
            mask,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let px = self.height * self.width;
        if px == 0 || self.image.len() != 3 * px || self.mask.len() != px {
            return Err(Error::Data(format!(
                "{}: image of {} values and mask of {} values do not fit {}×{}",
                self.id,
                self.image.len(),
                self.mask.len(),
                self.height,
                self.width
            )));
        }
        if self.mask.iter().any(|&m| m > 1) {
            return Err(Error::Data(format!("{}: mask is not binary", self.id)));
        }
        Ok(())
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.mask.iter().map(|&m| m as usize).sum::<usize>() as f64 / self.mask.len() as f64
    }
}

/// Stacks samples of equal size into an N×H×W×3 image batch and an
/// N×H×W×1 mask batch.
pub fn to_tensors(samples: &[&Sample]) -> Result<(Tensor<f32>, Tensor<f32>)> {
    let first = samples.first().ok_or_else(|| Error::Data("empty batch".into()))?;
    let (h, w) = (first.height, first.width);
    if let Some(s) = samples.iter().find(|s| (s.height, s.width) != (h, w)) {
        return Err(Error::Data(format!(
            "{} is {}×{}, batch is {h}×{w}",
            s.id, s.height, s.width
        )));
    }
    let images = samples.iter().flat_map(|s| s.image.iter().copied()).collect();
    let masks = samples.iter().flat_map(|s| s.mask.iter().map(|&m| m as f32)).collect();
    let n = samples.len();
    Ok((
        Tensor::from_vec(Shape::new(n, h, w, 3), images)?,
        Tensor::from_vec(Shape::new(n, h, w, 1), masks)?,
    ))
}

/// Bilinear resize of an H×W×C buffer.
pub fn resize_bilinear(data: &[f32], h: usize, w: usize, c: usize, out_h: usize, out_w: usize) -> Vec<f32> {
    let ys = bilinear_axis(h, out_h);
    let xs = bilinear_axis(w, out_w);
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let at = |y: usize, x: usize| data[(y * w + x) * c + ch] as f64;
                let top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
                let bottom = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
                out.push((top + fy * (bottom - top)) as f32);
            }
        }
    }
    out
}

fn nearest_axis(in_len: usize, out_len: usize) -> Vec<usize> {
    (0..out_len)
        .map(|o| (((o as f64 + 0.5) * in_len as f64 / out_len as f64) as usize).min(in_len - 1))
        .collect()
}

/// Resizes to `height`×`width`: the image bilinearly, the mask by nearest
/// neighbour followed by re-binarization.
pub fn resize_sample(s: &Sample, height: usize, width: usize) -> Result<Sample> {
    if height == 0 || width == 0 || !height.is_multiple_of(SIZE_MULTIPLE) || !width.is_multiple_of(SIZE_MULTIPLE) {
        return Err(Error::InvalidArgument(format!(
            "target size {height}×{width} must be positive multiples of {SIZE_MULTIPLE}"
        )));
    }
    s.validate()?;
    if (height, width) == (s.height, s.width) {
        return Ok(s.clone());
    }
    let image = resize_bilinear(&s.image, s.height, s.width, 3, height, width)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    let ys = nearest_axis(s.height, height);
    let xs = nearest_axis(s.width, width);
    let mask = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (y, x)))
        .map(|(y, x)| (s.mask[y * s.width + x] >= 1) as u8)
        .collect();
    Sample::new(s.id.clone(), height, width, image, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(h: usize, w: usize) -> Sample {
        let mask: Vec<u8> = (0..h * w).map(|i| ((i / w + i % w) % 2) as u8).collect();
        let image = mask.iter().flat_map(|&m| [m as f32, 0.5, 1.0 - m as f32]).collect();
        Sample::new("c", h, w, image, mask).unwrap()
    }

    #[test]
    fn rejects_bad_targets_and_inconsistent_samples() {
        assert!(resize_sample(&checker(32, 32), 30, 32).is_err());
        assert!(Sample::new("x", 2, 2, vec![0.0; 12], vec![0, 1, 2, 0]).is_err());
        assert!(Sample::new("x", 2, 2, vec![0.0; 11], vec![0; 4]).is_err());
    }

    #[test]
    fn large_to_fixed_size() {
        let r = resize_sample(&checker(512, 512), 128, 128).unwrap();
        assert_eq!(
            (r.height, r.width, r.image.len(), r.mask.len()),
            (128, 128, 128 * 128 * 3, 128 * 128)
        );
        assert!(r.mask.iter().all(|&m| m <= 1));
        assert!(r.image.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn same_size_is_identity() {
        let s = checker(32, 48);
        assert_eq!(resize_sample(&s, 32, 48).unwrap(), s);
    }

    #[test]
    fn stacking_checks_sizes() {
        let (a, b) = (checker(16, 16), checker(32, 32));
        assert!(to_tensors(&[&a, &b]).is_err());
        let (x, y) = to_tensors(&[&a, &a]).unwrap();
        assert_eq!(x.shape(), Shape::new(2, 16, 16, 3));
        assert_eq!(y.shape(), Shape::new(2, 16, 16, 1));
    }
}
