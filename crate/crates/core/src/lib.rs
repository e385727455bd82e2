//! Parallel down-up fusion network for salient object detection in optical
//! remote sensing images.
//!
//! The crate contains everything needed to build, train and evaluate the
//! network on a CPU:
//!
//! - [`model`]: VGG-16 style backbone, five parallel down-up paths with dense
//!   units and cross-path hand-offs, the fusion head, and the four ablation
//!   variants.
//! - [`training`]: binary cross-entropy, ADAM, the training loop,
//!   checkpoints and a finite-difference gradient verifier.
//! - [`metrics`]: P-R curves, F-measure, MAE and S-measure.
//! - [`data`]: dataset loading, resizing, augmentation, batching and a
//!   synthetic corpus generator.
//!
//! Tensors are NHWC. Inference and training use `f32`; the gradient check
//! runs the same code in `f64`.

pub mod data;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod params;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use model::{build_variant, count_parameters, model_forward, Model, NetworkConfig, Variant};
pub use params::{ParamId, ParamStore};
pub use tensor::{Float, Shape, Tensor};
