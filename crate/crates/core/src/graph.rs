//! Reverse-mode differentiation over a recorded forward pass.
//!
//! A [`Graph`] records every layer application together with its output.
//! Nodes are appended in execution order, so the node list is already a
//! topological order and the backward sweep simply walks it in reverse.

use crate::error::{Error, Result};
use crate::ops::{self, Activation};
use crate::params::{ParamId, ParamStore};
use crate::tensor::{Float, Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug)]
enum Op {
    Input,
    Conv {
        x: NodeId,
        weight: ParamId,
        bias: ParamId,
        act: Activation,
    },
    MaxPool {
        x: NodeId,
        argmax: Vec<usize>,
    },
    Upsample {
        x: NodeId,
        factor: usize,
    },
    Concat {
        inputs: Vec<NodeId>,
    },
}

#[derive(Debug)]
struct Node<T: Float> {
    label: String,
    value: Tensor<T>,
    op: Op,
    requires_grad: bool,
}

/// Channel arithmetic of one concatenation, kept for structural checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatRecord {
    pub label: String,
    pub input_channels: Vec<usize>,
    pub output_channels: usize,
}

pub struct Graph<'p, T: Float> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
    concats: Vec<ConcatRecord>,
}

impl<'p, T: Float> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            concats: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore<T> {
        self.params
    }

    fn push(&mut self, label: String, value: Tensor<T>, op: Op, requires_grad: bool) -> Result<NodeId> {
        if !value.all_finite() {
            return Err(Error::NonFinite { layer: label });
        }
        self.nodes.push(Node {
            label,
            value,
            op,
            requires_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Adds a constant leaf; no gradient flows into it.
    pub fn input(&mut self, value: Tensor<T>, label: impl Into<String>) -> Result<NodeId> {
        self.push(label.into(), value, Op::Input, false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> Shape {
        self.nodes[id.0].value.shape()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn concat_log(&self) -> &[ConcatRecord] {
        &self.concats
    }

    /// Hash of every piecewise-linear branch taken in the forward pass: the
    /// sign of each ReLU output and each max-pool winner. Two evaluations
    /// with equal patterns lie on the same smooth piece of the network.
    pub fn activation_pattern(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| h = (h ^ v).wrapping_mul(PRIME);
        for node in &self.nodes {
            match &node.op {
                Op::Conv {
                    act: Activation::Relu, ..
                } => {
                    for chunk in node.value.data().chunks(64) {
                        mix(chunk
                            .iter()
                            .enumerate()
                            .fold(0, |bits, (i, &v)| bits | (((v > T::ZERO) as u64) << i)));
                    }
                }
                Op::MaxPool { argmax, .. } => argmax.iter().for_each(|&a| mix(a as u64)),
                _ => {}
            }
        }
        h
    }

    pub fn into_value(mut self, id: NodeId) -> Tensor<T> {
        std::mem::replace(&mut self.nodes[id.0].value, Tensor::zeros(Shape::new(0, 0, 0, 0)))
    }

    pub fn conv(
        &mut self,
        x: NodeId,
        weight: ParamId,
        bias: ParamId,
        act: Activation,
        label: impl Into<String>,
    ) -> Result<NodeId> {
        let label = label.into();
        let w = &self.params.by_id(weight).data;
        let b = &self.params.by_id(bias).data;
        let out = ops::conv3x3_forward(self.value(x), w, b, act).map_err(|e| Error::Shape(format!("{label}: {e}")))?;
        self.push(label, out, Op::Conv { x, weight, bias, act }, true)
    }

    pub fn max_pool2(&mut self, x: NodeId, label: impl Into<String>) -> Result<NodeId> {
        let label = label.into();
        let (out, argmax) = ops::max_pool2_forward(self.value(x)).map_err(|e| Error::Shape(format!("{label}: {e}")))?;
        let rg = self.nodes[x.0].requires_grad;
        self.push(label, out, Op::MaxPool { x, argmax }, rg)
    }

    pub fn upsample(&mut self, x: NodeId, factor: usize, label: impl Into<String>) -> Result<NodeId> {
        let out = ops::upsample_bilinear(self.value(x), factor)?;
        let rg = self.nodes[x.0].requires_grad;
        self.push(label.into(), out, Op::Upsample { x, factor }, rg)
    }

    pub fn concat(&mut self, inputs: &[NodeId], label: impl Into<String>) -> Result<NodeId> {
        let label = label.into();
        let values: Vec<&Tensor<T>> = inputs.iter().map(|&i| self.value(i)).collect();
        let out = ops::concat_channels(&values).map_err(|e| Error::Shape(format!("{label}: {e}")))?;
        let input_channels: Vec<usize> = values.iter().map(|t| t.shape().c).collect();
        let output_channels = out.shape().c;
        debug_assert_eq!(output_channels, input_channels.iter().sum::<usize>());
        self.concats.push(ConcatRecord {
            label: label.clone(),
            input_channels,
            output_channels,
        });
        let rg = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.push(
            label,
            out,
            Op::Concat {
                inputs: inputs.to_vec(),
            },
            rg,
        )
    }

    /// Back-propagates `grad` (the gradient of a scalar objective with
    /// respect to `output`) and returns parameter gradients laid out like
    /// the parameter store.
    pub fn backward(&self, output: NodeId, grad: Tensor<T>) -> Result<ParamStore<T>> {
        if grad.shape() != self.shape(output) {
            return Err(Error::Shape(format!(
                "seed gradient {} does not match output {}",
                grad.shape(),
                self.shape(output)
            )));
        }
        let mut param_grads = ParamStore::<T>::new();
        for (name, p) in self.params.iter() {
            param_grads.insert(name, p.shape.clone(), vec![T::ZERO; p.data.len()])?;
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(grad);

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Input => {}
                Op::Conv { x, weight, bias, act } => {
                    let wants_dx = self.nodes[x.0].requires_grad;
                    let cg = ops::conv3x3_backward(
                        self.value(*x),
                        &self.params.by_id(*weight).data,
                        &node.value,
                        &g,
                        *act,
                        wants_dx,
                    )?;
                    accumulate(&mut param_grads.by_id_mut(*weight).data, &cg.weight);
                    accumulate(&mut param_grads.by_id_mut(*bias).data, &cg.bias);
                    if let Some(dx) = cg.input {
                        add_grad(&mut grads, *x, dx);
                    }
                }
                Op::MaxPool { x, argmax } => {
                    let dx = ops::max_pool2_backward(self.shape(*x), argmax, &g);
                    add_grad(&mut grads, *x, dx);
                }
                Op::Upsample { x, factor } => {
                    let dx = ops::upsample_bilinear_backward(self.shape(*x), *factor, &g)?;
                    add_grad(&mut grads, *x, dx);
                }
                Op::Concat { inputs } => {
                    let channels: Vec<usize> = inputs.iter().map(|i| self.shape(*i).c).collect();
                    for (i, part) in inputs.iter().zip(ops::split_channels(&g, &channels)) {
                        if self.nodes[i.0].requires_grad {
                            add_grad(&mut grads, *i, part);
                        }
                    }
                }
            }
        }
        Ok(param_grads)
    }
}

fn accumulate<T: Float>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn add_grad<T: Float>(grads: &mut [Option<Tensor<T>>], id: NodeId, g: Tensor<T>) {
    match &mut grads[id.0] {
        Some(existing) => accumulate(existing.data_mut(), g.data()),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_output_names_the_layer() {
        let mut params = ParamStore::<f32>::new();
        let w = params.insert("w", vec![3, 3, 1, 1], vec![f32::MAX; 9]).unwrap();
        let b = params.insert("b", vec![1], vec![0.0]).unwrap();
        let mut g = Graph::new(&params);
        let x = g.input(Tensor::full(Shape::new(1, 4, 4, 1), 1e30), "image").unwrap();
        match g.conv(x, w, b, Activation::Identity, "stage1.conv1") {
            Err(Error::NonFinite { layer }) => assert_eq!(layer, "stage1.conv1"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn shared_node_gradients_accumulate() {
        // out = concat(conv(x), conv(x)) with the same conv node used twice.
        let mut params = ParamStore::<f64>::new();
        let w = params
            .insert("w", vec![3, 3, 1, 1], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let b = params.insert("b", vec![1], vec![0.0]).unwrap();
        let mut g = Graph::new(&params);
        let x = g.input(Tensor::full(Shape::new(1, 2, 2, 1), 2.0), "x").unwrap();
        let y = g.conv(x, w, b, Activation::Identity, "conv").unwrap();
        let out = g.concat(&[y, y], "cat").unwrap();
        let grads = g.backward(out, Tensor::full(g.shape(out), 1.0)).unwrap();
        // d/db Σ out = 2 · 4 pixels
        assert_eq!(grads.get("b").unwrap().data, vec![8.0]);
        assert_eq!(g.concat_log()[0].output_channels, 2);
    }
}
