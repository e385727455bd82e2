//! Forward pass, recorded onto a [`Graph`] so the same code serves
//! inference and training.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ops::Activation;
use crate::params::ParamStore;
use crate::tensor::{Float, Tensor};

use super::arch::{Backbone, ConvLayer, DenseUnit, FusionHead, Model, PathSpec};
use super::config::{check_input_size, NUM_PATHS};

fn conv<T: Float>(g: &mut Graph<'_, T>, x: NodeId, layer: &ConvLayer, act: Activation) -> Result<NodeId> {
    g.conv(x, layer.weight, layer.bias, act, layer.name.as_str())
}

/// Runs the backbone and returns its five taps.
pub fn backbone_forward<T: Float>(
    g: &mut Graph<'_, T>,
    backbone: &Backbone,
    image: NodeId,
) -> Result<[NodeId; NUM_PATHS]> {
    let mut taps = [image; NUM_PATHS];
    let mut x = image;
    for (s, stage) in backbone.stages.iter().enumerate() {
        if s > 0 {
            x = g.max_pool2(x, format!("backbone.pool{s}"))?;
        }
        for layer in stage {
            x = conv(g, x, layer, Activation::Relu)?;
        }
        taps[s] = x;
    }
    Ok(taps)
}

/// Three successive conv+ReLU layers; a dense unit concatenates all three
/// outputs, a plain one keeps only the last. `cross_in`, when given, is
/// appended to the concatenation.
pub fn dense_unit_forward<T: Float>(
    g: &mut Graph<'_, T>,
    x: NodeId,
    unit: &DenseUnit,
    cross_in: Option<NodeId>,
    label: &str,
) -> Result<NodeId> {
    if let Some(c) = cross_in {
        if g.shape(c).spatial() != g.shape(x).spatial() {
            return Err(Error::Shape(format!(
                "{label}: cross-path input {} does not match unit input {} spatially",
                g.shape(c),
                g.shape(x)
            )));
        }
    }
    let a = conv(g, x, &unit.convs[0], Activation::Relu)?;
    let b = conv(g, a, &unit.convs[1], Activation::Relu)?;
    let c = conv(g, b, &unit.convs[2], Activation::Relu)?;
    let mut parts = if unit.dense { vec![a, b, c] } else { vec![c] };
    parts.extend(cross_in);
    if parts.len() == 1 {
        Ok(parts[0])
    } else {
        g.concat(&parts, format!("{label}.concat"))
    }
}

/// Result of running one path.
#[derive(Clone, Copy, Debug)]
pub struct PathOutput {
    pub index: usize,
    /// Tensor entering the first dense unit.
    pub entry: NodeId,
    /// Compression-2 output at the path's own resolution.
    pub features: NodeId,
    /// `features` brought to input resolution.
    pub output: NodeId,
    /// Hand-off for path `index + 1`.
    pub cross_out: Option<NodeId>,
}

/// dense unit 1 (+ hand-off) → compression → dense unit 2 → compression,
/// then up-sampling to input resolution. The hand-off for the next path is
/// the (pooled) compression-1 output.
pub fn path_forward<T: Float>(
    g: &mut Graph<'_, T>,
    path: &PathSpec,
    tap: NodeId,
    cross_in: Option<NodeId>,
) -> Result<PathOutput> {
    let k = path.index;
    if cross_in.is_some() != path.cross_in_channels.is_some() {
        return Err(Error::InvalidArgument(format!(
            "path {k}: cross-path input presence does not match wiring"
        )));
    }
    let entry = if path.entry_upsample > 1 {
        g.upsample(tap, path.entry_upsample, format!("path{k}.entry_upsample"))?
    } else {
        tap
    };
    let u1 = dense_unit_forward(g, entry, &path.unit1, cross_in, &format!("path{k}.unit1"))?;
    let c1 = conv(g, u1, &path.compress1, Activation::Relu)?;
    let cross_out = if path.emits_cross {
        Some(if path.pool_cross {
            g.max_pool2(c1, format!("path{k}.cross_pool"))?
        } else {
            c1
        })
    } else {
        None
    };
    let u2 = dense_unit_forward(g, c1, &path.unit2, None, &format!("path{k}.unit2"))?;
    let features = conv(g, u2, &path.compress2, Activation::Relu)?;
    let output = upsample_to_input(g, features, path.output_upsample, &format!("path{k}.upsample"))?;
    Ok(PathOutput {
        index: k,
        entry,
        features,
        output,
        cross_out,
    })
}

/// Bilinear up-sampling by `factor` ∈ {1, 2, 4, 8, 16}; factor 1 is the
/// identity and adds no node.
pub fn upsample_to_input<T: Float>(g: &mut Graph<'_, T>, x: NodeId, factor: usize, label: &str) -> Result<NodeId> {
    if factor == 1 {
        return Ok(x);
    }
    g.upsample(x, factor, label)
}

/// Channel concatenation of the five path outputs in path order.
pub fn fuse_paths<T: Float>(g: &mut Graph<'_, T>, paths: &[PathOutput]) -> Result<NodeId> {
    if paths.len() != NUM_PATHS {
        return Err(Error::InvalidArgument(format!(
            "expected {NUM_PATHS} path outputs, got {}",
            paths.len()
        )));
    }
    let ids: Vec<NodeId> = paths.iter().map(|p| p.output).collect();
    fuse_nodes(g, &ids)
}

/// [`fuse_paths`] over bare nodes.
pub fn fuse_nodes<T: Float>(g: &mut Graph<'_, T>, outputs: &[NodeId]) -> Result<NodeId> {
    let hw = g.shape(outputs[0]).spatial();
    if let Some(bad) = outputs.iter().find(|&&o| g.shape(o).spatial() != hw) {
        return Err(Error::Shape(format!(
            "path output {} is not at the common resolution {}×{}",
            g.shape(*bad),
            hw.0,
            hw.1
        )));
    }
    g.concat(outputs, "fusion.concat")
}

/// conv+ReLU → conv+ReLU → conv+sigmoid.
pub fn fusion_head_forward<T: Float>(g: &mut Graph<'_, T>, head: &FusionHead, fused: NodeId) -> Result<NodeId> {
    let m1 = conv(g, fused, &head.convs[0], Activation::Relu)?;
    let m2 = conv(g, m1, &head.convs[1], Activation::Relu)?;
    conv(g, m2, &head.convs[2], Activation::Sigmoid)
}

/// Node ids of the interesting intermediate tensors of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub taps: [NodeId; NUM_PATHS],
    pub paths: Vec<PathOutput>,
    pub fused: NodeId,
    pub output: NodeId,
}

impl Model {
    /// Records the whole network applied to `image` (N×H×W×3) onto `g`.
    pub fn forward_graph<T: Float>(&self, g: &mut Graph<'_, T>, image: NodeId) -> Result<ForwardTrace> {
        let s = g.shape(image);
        if s.c != 3 {
            return Err(Error::Shape(format!("expected a 3-channel image, got {s}")));
        }
        check_input_size(s.h, s.w)?;
        g.params().check_layout(self.param_specs())?;

        let taps = backbone_forward(g, &self.backbone, image)?;
        let mut outs = Vec::with_capacity(NUM_PATHS);
        let mut cross = None;
        for (path, &tap) in self.paths.iter().zip(&taps) {
            let cross_in = if path.cross_in_channels.is_some() { cross } else { None };
            let out = path_forward(g, path, tap, cross_in)?;
            let expected = self.path_resolution(path.index, s.h, s.w);
            if g.shape(out.entry).spatial() != expected {
                return Err(Error::Shape(format!(
                    "path {} entered at {}, expected {}×{}",
                    path.index,
                    g.shape(out.entry),
                    expected.0,
                    expected.1
                )));
            }
            cross = out.cross_out;
            outs.push(out);
        }
        let fused = fuse_paths(g, &outs)?;
        let output = fusion_head_forward(g, &self.head, fused)?;
        Ok(ForwardTrace {
            taps,
            paths: outs,
            fused,
            output,
        })
    }
}

/// Saliency map N×H×W×1 for an N×H×W×3 image batch with values in [0, 1].
pub fn model_forward<T: Float>(model: &Model, params: &ParamStore<T>, image: &Tensor<T>) -> Result<Tensor<T>> {
    let mut g = Graph::new(params);
    let x = g.input(image.clone(), "image")?;
    let trace = model.forward_graph(&mut g, x)?;
    Ok(g.into_value(trace.output))
}
