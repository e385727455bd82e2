use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of parallel paths, and of backbone stages feeding them.
pub const NUM_PATHS: usize = 5;

/// Spatial sizes must survive four halvings in the backbone.
pub const SIZE_MULTIPLE: usize = 16;

/// Which architecture to build: the full network or one of the ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Complete network.
    #[serde(rename = "FULL")]
    Full,
    /// In-path concatenations removed; convolutions are chained directly.
    #[serde(rename = "NO_DC")]
    NoDc,
    /// Only the second unit of each path keeps its dense concatenation.
    #[serde(rename = "ONE_DC")]
    OneDc,
    /// No hand-off from path k to path k+1.
    #[serde(rename = "NO_CPC")]
    NoCpc,
    /// Every path runs at input resolution; no per-path down/up-sampling.
    #[serde(rename = "NO_DUS")]
    NoDus,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoDc,
        Variant::OneDc,
        Variant::NoCpc,
        Variant::NoDus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "FULL",
            Variant::NoDc => "NO_DC",
            Variant::OneDc => "ONE_DC",
            Variant::NoCpc => "NO_CPC",
            Variant::NoDus => "NO_DUS",
        }
    }

    /// Whether dense unit `unit` (1 or 2) concatenates its three outputs.
    pub fn unit_is_dense(self, unit: usize) -> bool {
        match self {
            Variant::NoDc => false,
            Variant::OneDc => unit == 2,
            _ => true,
        }
    }

    pub fn cross_path(self) -> bool {
        self != Variant::NoCpc
    }

    pub fn down_up_sampling(self) -> bool {
        self != Variant::NoDus
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Variant::ALL.into_iter().find(|v| v.name() == norm).ok_or_else(|| {
            Error::Config(format!(
                "unknown variant `{s}` (expected one of FULL, NO_DC, ONE_DC, NO_CPC, NO_DUS)"
            ))
        })
    }
}

/// Everything that determines the computation graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Output channels of each of the five backbone stages.
    pub backbone_widths: Vec<usize>,
    /// Number of 3×3 convolutions in each backbone stage.
    pub backbone_depths: Vec<usize>,
    /// Width of the three convolutions inside each dense unit, per path.
    pub path_widths: Vec<usize>,
    /// Output channels of the two compression convolutions, per path.
    pub compression_widths: Vec<usize>,
    pub fusion_width: usize,
    pub variant: Variant,
    /// (height, width) that inputs are resized to.
    pub input_size: (usize, usize),
}

impl Default for NetworkConfig {
    /// VGG-16 backbone widths and depths, path widths matching the taps,
    /// 512-wide fusion head, 128×128 input.
    fn default() -> Self {
        NetworkConfig {
            backbone_widths: vec![64, 128, 256, 512, 512],
            backbone_depths: vec![2, 2, 3, 3, 3],
            path_widths: vec![64, 128, 256, 512, 512],
            compression_widths: vec![64, 128, 256, 512, 512],
            fusion_width: 512,
            variant: Variant::Full,
            input_size: (128, 128),
        }
    }
}

impl NetworkConfig {
    /// Desk-scale configuration: VGG depths with every width capped at 8.
    pub fn tiny() -> Self {
        NetworkConfig {
            backbone_widths: vec![4, 8, 8, 8, 8],
            backbone_depths: vec![2, 2, 3, 3, 3],
            path_widths: vec![4, 8, 8, 8, 8],
            compression_widths: vec![4, 8, 8, 8, 8],
            fusion_width: 8,
            variant: Variant::Full,
            input_size: (16, 16),
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_input_size(mut self, h: usize, w: usize) -> Self {
        self.input_size = (h, w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("backbone_widths", &self.backbone_widths),
            ("backbone_depths", &self.backbone_depths),
            ("path_widths", &self.path_widths),
            ("compression_widths", &self.compression_widths),
        ] {
            if v.len() != NUM_PATHS {
                return Err(Error::Config(format!(
                    "{name} must list exactly {NUM_PATHS} values, got {}",
                    v.len()
                )));
            }
            if v.contains(&0) {
                return Err(Error::Config(format!("{name} entries must be at least 1")));
            }
        }
        if self.fusion_width == 0 {
            return Err(Error::Config("fusion_width must be at least 1".into()));
        }
        check_input_size(self.input_size.0, self.input_size.1)
    }
}

pub(crate) fn check_input_size(h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 || !h.is_multiple_of(SIZE_MULTIPLE) || !w.is_multiple_of(SIZE_MULTIPLE) {
        return Err(Error::Config(format!(
            "input size {h}×{w} must be positive and divisible by {SIZE_MULTIPLE}"
        )));
    }
    Ok(())
}
