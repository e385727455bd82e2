//! Graph construction: turns a [`NetworkConfig`] into a parameter layout
//! and the wiring the forward pass follows.

use crate::error::{Error, Result};
use crate::params::{ParamId, ParamRole, ParamSpec};

use super::config::{NetworkConfig, Variant, NUM_PATHS};

/// One 3×3 convolution and the parameters backing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvLayer {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl ConvLayer {
    pub fn num_parameters(&self) -> usize {
        9 * self.in_channels * self.out_channels + self.out_channels
    }
}

#[derive(Default)]
struct LayoutBuilder {
    specs: Vec<ParamSpec>,
}

impl LayoutBuilder {
    fn conv(&mut self, name: String, cin: usize, cout: usize) -> ConvLayer {
        let weight = ParamId(self.specs.len());
        self.specs.push(ParamSpec {
            name: format!("{name}.weight"),
            shape: vec![3, 3, cin, cout],
            role: ParamRole::Weight { fan_in: 9 * cin },
        });
        let bias = ParamId(self.specs.len());
        self.specs.push(ParamSpec {
            name: format!("{name}.bias"),
            shape: vec![cout],
            role: ParamRole::Bias,
        });
        ConvLayer {
            name,
            in_channels: cin,
            out_channels: cout,
            weight,
            bias,
        }
    }
}

/// Five convolutional stages separated by four 2×2 max-pools. Tap `k` is
/// the output of stage `k`, i.e. the features just before the `k`-th
/// pooling; tap 5 is the last stage's output.
#[derive(Clone, Debug)]
pub struct Backbone {
    pub stages: Vec<Vec<ConvLayer>>,
}

impl Backbone {
    pub fn tap_channels(&self) -> Vec<usize> {
        self.stages
            .iter()
            .map(|s| s.last().expect("stages are non-empty").out_channels)
            .collect()
    }
}

/// Three successive conv+ReLU layers. A dense unit concatenates all three
/// outputs; a plain one forwards only the last.
#[derive(Clone, Debug)]
pub struct DenseUnit {
    pub convs: [ConvLayer; 3],
    pub dense: bool,
}

impl DenseUnit {
    pub fn own_output_channels(&self) -> usize {
        if self.dense {
            self.convs.iter().map(|c| c.out_channels).sum()
        } else {
            self.convs[2].out_channels
        }
    }
}

/// Wiring of one parallel path.
#[derive(Clone, Debug)]
pub struct PathSpec {
    /// 1-based path index.
    pub index: usize,
    pub unit1: DenseUnit,
    pub compress1: ConvLayer,
    pub unit2: DenseUnit,
    pub compress2: ConvLayer,
    /// Channels of the hand-off received from the previous path, if any.
    pub cross_in_channels: Option<usize>,
    /// Whether this path hands compression-1 features to the next path.
    pub emits_cross: bool,
    /// Whether the hand-off is max-pooled (false only without down/up-sampling).
    pub pool_cross: bool,
    /// Bilinear factor applied to the backbone tap before the path.
    pub entry_upsample: usize,
    /// Bilinear factor applied to the path output to reach input resolution.
    pub output_upsample: usize,
}

impl PathSpec {
    /// Down-sampling factor of the resolution this path operates at.
    pub fn resolution_divisor(&self) -> usize {
        self.output_upsample
    }

    pub fn output_channels(&self) -> usize {
        self.compress2.out_channels
    }
}

/// Two wide conv+ReLU layers and a single-channel conv+sigmoid.
#[derive(Clone, Debug)]
pub struct FusionHead {
    pub convs: [ConvLayer; 3],
}

/// A fully constructed network layout.
#[derive(Clone, Debug)]
pub struct Model {
    config: NetworkConfig,
    specs: Vec<ParamSpec>,
    pub backbone: Backbone,
    pub paths: Vec<PathSpec>,
    pub head: FusionHead,
}

fn build_backbone_into(config: &NetworkConfig, b: &mut LayoutBuilder) -> Result<Backbone> {
    if config.backbone_widths.len() != NUM_PATHS || config.backbone_depths.len() != NUM_PATHS {
        return Err(Error::Config(format!(
            "backbone needs {NUM_PATHS} stage widths and depths, got {} and {}",
            config.backbone_widths.len(),
            config.backbone_depths.len()
        )));
    }
    let mut cin = 3;
    let mut stages = Vec::with_capacity(NUM_PATHS);
    for (s, (&width, &depth)) in config.backbone_widths.iter().zip(&config.backbone_depths).enumerate() {
        if width == 0 || depth == 0 {
            return Err(Error::Config("backbone widths and depths must be at least 1".into()));
        }
        let mut stage = Vec::with_capacity(depth);
        for i in 0..depth {
            stage.push(b.conv(format!("backbone.stage{}.conv{}", s + 1, i + 1), cin, width));
            cin = width;
        }
        stages.push(stage);
    }
    Ok(Backbone { stages })
}

/// Builds the shared feature extractor on its own.
pub fn build_backbone(config: &NetworkConfig) -> Result<(Backbone, Vec<ParamSpec>)> {
    let mut b = LayoutBuilder::default();
    let backbone = build_backbone_into(config, &mut b)?;
    Ok((backbone, b.specs))
}

fn dense_unit(b: &mut LayoutBuilder, prefix: &str, cin: usize, width: usize, dense: bool) -> DenseUnit {
    DenseUnit {
        convs: [
            b.conv(format!("{prefix}.conv1"), cin, width),
            b.conv(format!("{prefix}.conv2"), width, width),
            b.conv(format!("{prefix}.conv3"), width, width),
        ],
        dense,
    }
}

/// Builds the network for `config.variant`.
pub fn build_variant(config: &NetworkConfig) -> Result<Model> {
    config.validate()?;
    let variant = config.variant;
    let mut b = LayoutBuilder::default();
    let backbone = build_backbone_into(config, &mut b)?;
    let taps = backbone.tap_channels();

    let mut paths = Vec::with_capacity(NUM_PATHS);
    let mut prev_cross: Option<usize> = None;
    for k in 1..=NUM_PATHS {
        let width = config.path_widths[k - 1];
        let comp = config.compression_widths[k - 1];
        let prefix = format!("path{k}");
        let cross_in_channels = if variant.cross_path() { prev_cross } else { None };

        let unit1 = dense_unit(
            &mut b,
            &format!("{prefix}.unit1"),
            taps[k - 1],
            width,
            variant.unit_is_dense(1),
        );
        let c1_in = unit1.own_output_channels() + cross_in_channels.unwrap_or(0);
        let compress1 = b.conv(format!("{prefix}.compress1"), c1_in, comp);
        let unit2 = dense_unit(
            &mut b,
            &format!("{prefix}.unit2"),
            comp,
            width,
            variant.unit_is_dense(2),
        );
        let compress2 = b.conv(format!("{prefix}.compress2"), unit2.own_output_channels(), comp);

        let scale = 1 << (k - 1);
        let dus = variant.down_up_sampling();
        let emits_cross = k < NUM_PATHS && variant.cross_path();
        paths.push(PathSpec {
            index: k,
            unit1,
            compress1,
            unit2,
            compress2,
            cross_in_channels,
            emits_cross,
            pool_cross: dus,
            entry_upsample: if dus { 1 } else { scale },
            output_upsample: if dus { scale } else { 1 },
        });
        prev_cross = emits_cross.then_some(comp);
    }

    let fused: usize = paths.iter().map(PathSpec::output_channels).sum();
    let fw = config.fusion_width;
    let head = FusionHead {
        convs: [
            b.conv("head.conv1".into(), fused, fw),
            b.conv("head.conv2".into(), fw, fw),
            b.conv("head.conv3".into(), fw, 1),
        ],
    };

    let model = Model {
        config: config.clone(),
        specs: b.specs,
        backbone,
        paths,
        head,
    };
    model.check_structure()?;
    Ok(model)
}

impl Model {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn param_specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    /// Spatial size path `k` (1-based) operates at for an `h×w` input.
    pub fn path_resolution(&self, k: usize, h: usize, w: usize) -> (usize, usize) {
        let d = self.paths[k - 1].resolution_divisor();
        (h / d, w / d)
    }

    /// Directed cross-path edges `(from, to)` present in this graph.
    pub fn cross_edges(&self) -> Vec<(usize, usize)> {
        self.paths
            .iter()
            .filter(|p| p.emits_cross)
            .map(|p| (p.index, p.index + 1))
            .collect()
    }

    /// Construction-time checks: resolution ladder for the configured input
    /// size, channel bookkeeping, and forward-only cross-path wiring.
    fn check_structure(&self) -> Result<()> {
        let (h, w) = self.config.input_size;
        let taps = self.backbone.tap_channels();
        for p in &self.paths {
            let k = p.index;
            let expected = if self.variant().down_up_sampling() {
                (h >> (k - 1), w >> (k - 1))
            } else {
                (h, w)
            };
            if self.path_resolution(k, h, w) != expected {
                return Err(Error::Shape(format!("path {k} resolution does not follow the ladder")));
            }
            if p.unit1.convs[0].in_channels != taps[k - 1] {
                return Err(Error::Shape(format!(
                    "path {k} entry width differs from its backbone tap"
                )));
            }
            let cross = p.cross_in_channels.unwrap_or(0);
            if p.compress1.in_channels != p.unit1.own_output_channels() + cross {
                return Err(Error::Shape(format!(
                    "path {k} compression-1 input channels do not add up"
                )));
            }
        }
        for (from, to) in self.cross_edges() {
            if to != from + 1 || to > NUM_PATHS {
                return Err(Error::Shape(format!("illegal cross-path edge {from}→{to}")));
            }
            if self.paths[to - 1].cross_in_channels != Some(self.paths[from - 1].compress1.out_channels) {
                return Err(Error::Shape(format!(
                    "cross-path edge {from}→{to} has inconsistent width"
                )));
            }
        }
        Ok(())
    }

    /// Every convolution, in parameter order.
    pub fn conv_layers(&self) -> Vec<&ConvLayer> {
        let mut out: Vec<&ConvLayer> = self.backbone.stages.iter().flatten().collect();
        for p in &self.paths {
            out.extend(p.unit1.convs.iter());
            out.push(&p.compress1);
            out.extend(p.unit2.convs.iter());
            out.push(&p.compress2);
        }
        out.extend(self.head.convs.iter());
        out
    }
}

/// Exact number of scalar weights and biases.
pub fn count_parameters(model: &Model) -> usize {
    model.specs.iter().map(ParamSpec::len).sum()
}
