use crate::error::{Error, Result};
use crate::tensor::{Float, Tensor};

/// Gray levels at or above this value count as foreground in mask images.
pub const MASK_THRESHOLD: u8 = 128;

/// H×W saliency values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SaliencyMap {
    /// Values are clipped to [0, 1]; non-finite values are rejected.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height * width != data.len() || data.is_empty() {
            return Err(Error::Shape(format!(
                "{} values for a {height}×{width} map",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("saliency map contains non-finite values".into()));
        }
        Ok(SaliencyMap {
            height,
            width,
            data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    /// 8-bit gray levels scaled by 1/255.
    pub fn from_gray8(height: usize, width: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(height, width, pixels.iter().map(|&p| p as f64 / 255.0).collect())
    }

    /// Batch item `n` of an N×H×W×1 network output.
    pub fn from_tensor<T: Float>(t: &Tensor<T>, n: usize) -> Result<Self> {
        let s = t.shape();
        if s.c != 1 || n >= s.n {
            return Err(Error::Shape(format!("cannot take map {n} from {s}")));
        }
        Self::new(s.h, s.w, t.item(n).iter().map(|v| v.to_f64()).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Strictly binary H×W mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl GroundTruth {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if height * width != data.len() || data.is_empty() {
            return Err(Error::Shape(format!(
                "{} values for a {height}×{width} mask",
                data.len()
            )));
        }
        Ok(GroundTruth { height, width, data })
    }

    /// Accepts only the values 0 and 1.
    pub fn from_binary(height: usize, width: usize, values: &[u8]) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidArgument(format!("mask value {v} is not binary")));
        }
        Self::new(height, width, values.iter().map(|&v| v == 1).collect())
    }

    /// Binarizes 8-bit gray levels at [`MASK_THRESHOLD`].
    pub fn from_gray8(height: usize, width: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(height, width, pixels.iter().map(|&p| p >= MASK_THRESHOLD).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// The mask as a real-valued map.
    pub fn as_saliency(&self) -> SaliencyMap {
        SaliencyMap {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        }
    }
}

pub(crate) fn check_same_shape(s: &SaliencyMap, gt: &GroundTruth) -> Result<()> {
    if (s.height, s.width) != (gt.height, gt.width) {
        return Err(Error::Shape(format!(
            "saliency map {}×{} and ground truth {}×{} differ in size",
            s.height, s.width, gt.height, gt.width
        )));
    }
    Ok(())
}
