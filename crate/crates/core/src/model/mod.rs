//! Network construction and execution.

mod arch;
mod config;
mod forward;

pub use arch::{
    build_backbone, build_variant, count_parameters, Backbone, ConvLayer, DenseUnit, FusionHead, Model, PathSpec,
};
pub use config::{NetworkConfig, Variant, NUM_PATHS, SIZE_MULTIPLE};
pub use forward::{
    backbone_forward, dense_unit_forward, fuse_nodes, fuse_paths, fusion_head_forward, model_forward, path_forward,
    upsample_to_input, ForwardTrace, PathOutput,
};
