use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::params::{ParamRole, ParamStore};
use crate::tensor::Float;

/// How convolution weights are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// Zero-mean Gaussian with a fixed standard deviation.
    Gaussian { std: f64 },
    /// Zero-mean Gaussian with standard deviation `sqrt(2 / fan_in)`.
    He,
}

impl WeightInit {
    pub fn std_for(self, fan_in: usize) -> f64 {
        match self {
            WeightInit::Gaussian { std } => std,
            WeightInit::He => (2.0 / fan_in as f64).sqrt(),
        }
    }
}

impl Default for WeightInit {
    fn default() -> Self {
        WeightInit::Gaussian { std: 0.01 }
    }
}

impl fmt::Display for WeightInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightInit::Gaussian { std } => write!(f, "gaussian:{std}"),
            WeightInit::He => f.write_str("he"),
        }
    }
}

impl FromStr for WeightInit {
    type Err = Error;

    /// `gaussian:<std>` or `he`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("he") {
            return Ok(WeightInit::He);
        }
        if let Some(std) = s.strip_prefix("gaussian:") {
            let std: f64 = std
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad Gaussian std in `{s}`")))?;
            if !(std.is_finite() && std > 0.0) {
                return Err(Error::Config(format!("Gaussian std must be positive, got {std}")));
            }
            return Ok(WeightInit::Gaussian { std });
        }
        Err(Error::Config(format!(
            "unknown weight init `{s}` (expected `gaussian:<std>` or `he`)"
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub weight_init: WeightInit,
    pub bias_init: f64,
}

impl TrainConfig {
    /// Batch 8, ADAM at 1e-4 with β = (0.9, 0.999), ε = 1e-8, Gaussian
    /// weights with std 0.01 and zero biases.
    pub fn new(max_steps: usize) -> Self {
        TrainConfig {
            batch_size: 8,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_steps,
            seed: 0,
            weight_init: WeightInit::default(),
            bias_init: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.adam_eps.is_finite() && self.adam_eps > 0.0) {
            return Err(Error::Config("adam_eps must be positive".into()));
        }
        if !self.bias_init.is_finite() {
            return Err(Error::Config("bias_init must be finite".into()));
        }
        Ok(())
    }
}

/// Draws initial parameters for `model`. Parameters are visited in layout
/// order from a single seeded stream, so layers shared between variants
/// (the backbone) start identical.
pub fn init_params<T: Float>(model: &Model, config: &TrainConfig) -> ParamStore<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = ParamStore::new();
    for spec in model.param_specs() {
        let data: Vec<T> = match spec.role {
            ParamRole::Weight { fan_in } => {
                let normal = Normal::new(0.0, config.weight_init.std_for(fan_in)).expect("positive std");
                (0..spec.len()).map(|_| T::from_f64(normal.sample(&mut rng))).collect()
            }
            ParamRole::Bias => vec![T::from_f64(config.bias_init); spec.len()],
        };
        store
            .insert(&spec.name, spec.shape.clone(), data)
            .expect("unique parameter names");
    }
    store
}
