//! Run configuration: flat `key = value` files with `#` comments, layered
//! as defaults, then the file, then command-line overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pdfnet_core::data::AugmentationSpec;
use pdfnet_core::training::{TrainConfig, WeightInit};
use pdfnet_core::{NetworkConfig, Variant};

/// Keys in the order they are echoed.
pub const KEYS: &[&str] = &[
    "variant",
    "size",
    "backbone_widths",
    "backbone_depths",
    "path_widths",
    "compression_widths",
    "fusion_width",
    "batch_size",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "steps",
    "seed",
    "weight_init",
    "bias_init",
    "checkpoint_every",
    "augment_flip_horizontal",
    "augment_flip_vertical",
    "augment_rotations",
    "synthetic",
    "synthetic_samples",
    "synthetic_eval_samples",
    "dataset_root",
    "train_split",
    "test_split",
    "out",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub augment: AugmentationSpec,
    pub checkpoint_every: usize,
    pub synthetic: bool,
    pub synthetic_samples: usize,
    pub synthetic_eval_samples: usize,
    pub dataset_root: Option<PathBuf>,
    pub train_split: String,
    pub test_split: String,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: NetworkConfig::default(),
            train: TrainConfig::new(1000),
            augment: AugmentationSpec::default(),
            checkpoint_every: 500,
            synthetic: false,
            synthetic_samples: 16,
            synthetic_eval_samples: 8,
            dataset_root: None,
            train_split: "train".into(),
            test_split: "test".into(),
            out: PathBuf::from("runs/latest"),
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("{key}: `{v}` is not a count"))
        })
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("{key}: `{value}` is not a boolean"),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| anyhow!("{key}: cannot parse `{value}`"))
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{}`", no + 1, raw.trim()))?;
        out.push((k.trim().to_ascii_lowercase().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let n = &mut self.network;
        let t = &mut self.train;
        match key {
            "variant" => n.variant = value.parse::<Variant>().map_err(|e| anyhow!("variant: {e}"))?,
            "size" => {
                let s: usize = parse_num(key, value)?;
                n.input_size = (s, s);
            }
            "backbone_widths" => n.backbone_widths = parse_list(key, value)?,
            "backbone_depths" => n.backbone_depths = parse_list(key, value)?,
            "path_widths" => n.path_widths = parse_list(key, value)?,
            "compression_widths" => n.compression_widths = parse_list(key, value)?,
            "fusion_width" => n.fusion_width = parse_num(key, value)?,
            "batch_size" => t.batch_size = parse_num(key, value)?,
            "learning_rate" => t.learning_rate = parse_num(key, value)?,
            "adam_beta1" => t.adam_beta1 = parse_num(key, value)?,
            "adam_beta2" => t.adam_beta2 = parse_num(key, value)?,
            "adam_eps" => t.adam_eps = parse_num(key, value)?,
            "steps" => t.max_steps = parse_num(key, value)?,
            "seed" => t.seed = parse_num(key, value)?,
            "weight_init" => t.weight_init = value.parse::<WeightInit>().map_err(|e| anyhow!("weight_init: {e}"))?,
            "bias_init" => t.bias_init = parse_num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, value)?,
            "augment_flip_horizontal" => self.augment.flip_horizontal = parse_bool(key, value)?,
            "augment_flip_vertical" => self.augment.flip_vertical = parse_bool(key, value)?,
            "augment_rotations" => {
                self.augment.rotations = if value.eq_ignore_ascii_case("none") || value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_num::<u32>(key, v.trim()))
                        .collect::<Result<_>>()?
                }
            }
            "synthetic" => self.synthetic = parse_bool(key, value)?,
            "synthetic_samples" => self.synthetic_samples = parse_num(key, value)?,
            "synthetic_eval_samples" => self.synthetic_eval_samples = parse_num(key, value)?,
            "dataset_root" => self.dataset_root = (!value.is_empty()).then(|| PathBuf::from(value)),
            "train_split" => self.train_split = value.to_string(),
            "test_split" => self.test_split = value.to_string(),
            "out" => self.out = PathBuf::from(value),
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.train.validate()?;
        self.augment.validate()?;
        if self.checkpoint_every == 0 {
            bail!("checkpoint_every must be at least 1");
        }
        if self.synthetic_samples == 0 || self.synthetic_eval_samples == 0 {
            bail!("synthetic corpora need at least one sample");
        }
        Ok(())
    }

    /// Training data must come from somewhere.
    pub fn require_data_source(&self) -> Result<()> {
        if !self.synthetic && self.dataset_root.is_none() {
            bail!("no dataset: set dataset_root or pass --synthetic");
        }
        Ok(())
    }

    pub fn value_of(&self, key: &str) -> String {
        let n = &self.network;
        let t = &self.train;
        match key {
            "variant" => n.variant.to_string(),
            "size" => n.input_size.0.to_string(),
            "backbone_widths" => join(&n.backbone_widths),
            "backbone_depths" => join(&n.backbone_depths),
            "path_widths" => join(&n.path_widths),
            "compression_widths" => join(&n.compression_widths),
            "fusion_width" => n.fusion_width.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "adam_beta1" => t.adam_beta1.to_string(),
            "adam_beta2" => t.adam_beta2.to_string(),
            "adam_eps" => t.adam_eps.to_string(),
            "steps" => t.max_steps.to_string(),
            "seed" => t.seed.to_string(),
            "weight_init" => t.weight_init.to_string(),
            "bias_init" => t.bias_init.to_string(),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "augment_flip_horizontal" => self.augment.flip_horizontal.to_string(),
            "augment_flip_vertical" => self.augment.flip_vertical.to_string(),
            "augment_rotations" if self.augment.rotations.is_empty() => "none".into(),
            "augment_rotations" => self
                .augment
                .rotations
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "synthetic" => self.synthetic.to_string(),
            "synthetic_samples" => self.synthetic_samples.to_string(),
            "synthetic_eval_samples" => self.synthetic_eval_samples.to_string(),
            "dataset_root" => self
                .dataset_root
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "train_split" => self.train_split.clone(),
            "test_split" => self.test_split.clone(),
            "out" => self.out.display().to_string(),
            _ => unreachable!("value_of called with unknown key {key}"),
        }
    }

    /// Every key with its resolved value, parseable by [`RunConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::from("# resolved configuration\n");
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_comments() {
        let mut c = RunConfig::default();
        c.apply_text("# header\nvariant = no-cpc   # inline\n\nsize=64\nbackbone_widths = 4, 8,8,8,8\n")
            .unwrap();
        assert_eq!(c.network.variant, Variant::NoCpc);
        assert_eq!(c.network.input_size, (64, 64));
        assert_eq!(c.network.backbone_widths, [4, 8, 8, 8, 8]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("colour = blue").is_err());
        assert!(c.apply_text("steps = many").is_err());
        assert!(c.apply_text("just a line").is_err());
        c.set("size", "60").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("weight_init = he\naugment_rotations = none\nlearning_rate = 3e-4\ndataset_root = /data/orssd")
            .unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn data_source_is_required() {
        let mut c = RunConfig::default();
        assert!(c.require_data_source().is_err());
        c.synthetic = true;
        assert!(c.require_data_source().is_ok());
    }
}
