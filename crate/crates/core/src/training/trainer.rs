use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Model;
use crate::params::ParamStore;
use crate::tensor::{Float, Tensor};

use super::config::{init_params, TrainConfig};
use super::loss::bce_sum_and_grad;

/// ADAM with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Float> Adam<T> {
    pub fn new(config: &TrainConfig, params: &ParamStore<T>) -> Self {
        let zeros: Vec<Vec<T>> = params.iter().map(|(_, p)| vec![T::ZERO; p.data.len()]).collect();
        Adam {
            learning_rate: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &ParamStore<T>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let one_b1 = T::from_f64(1.0 - self.beta1);
        let one_b2 = T::from_f64(1.0 - self.beta2);
        // lr·m̂/(√v̂+ε) with the corrections folded into the step size.
        let step = T::from_f64(self.learning_rate / c1);
        let inv_sqrt_c2 = T::from_f64(1.0 / c2.sqrt());
        let eps = T::from_f64(self.eps);
        for (((_, p), (_, g)), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((w, &gi), mi), vi) in p.data.iter_mut().zip(&g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + one_b1 * gi;
                *vi = b2 * *vi + one_b2 * gi * gi;
                *w -= step * *mi / (vi.sqrt() * inv_sqrt_c2 + eps);
            }
        }
    }
}

/// Mean cross-entropy of the network on a batch and its parameter
/// gradients. Items are processed one at a time and their gradients summed
/// in batch order.
pub fn loss_and_gradients<T: Float>(
    model: &Model,
    params: &ParamStore<T>,
    images: &Tensor<T>,
    masks: &Tensor<T>,
) -> Result<(f64, ParamStore<T>)> {
    let n = images.shape().n;
    if masks.shape().n != n || masks.shape().c != 1 {
        return Err(Error::Shape(format!(
            "mask batch {} does not pair with images {}",
            masks.shape(),
            images.shape()
        )));
    }
    let scale = 1.0 / masks.shape().len() as f64;
    let mut total = 0.0;
    let mut grads: Option<ParamStore<T>> = None;
    for i in 0..n {
        let mut g = Graph::new(params);
        let x = g.input(images.select(i), "image")?;
        let trace = model.forward_graph(&mut g, x)?;
        let (sum, dz) = bce_sum_and_grad(g.value(trace.output), &masks.select(i), scale)?;
        total += sum;
        let item = g.backward(trace.output, dz)?;
        grads = Some(match grads {
            None => item,
            Some(mut acc) => {
                for ((_, a), (_, b)) in acc.iter_mut().zip(item.iter()) {
                    for (x, &y) in a.data.iter_mut().zip(&b.data) {
                        *x += y;
                    }
                }
                acc
            }
        });
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::NonFinite { layer: "loss".into() });
    }
    Ok((loss, grads.expect("non-empty batch")))
}

/// Mean cross-entropy only.
pub fn batch_loss<T: Float>(
    model: &Model,
    params: &ParamStore<T>,
    images: &Tensor<T>,
    masks: &Tensor<T>,
) -> Result<f64> {
    Ok(batch_loss_and_pattern(model, params, images, masks)?.0)
}

/// Mean cross-entropy and the combined activation pattern of all items.
pub(crate) fn batch_loss_and_pattern<T: Float>(
    model: &Model,
    params: &ParamStore<T>,
    images: &Tensor<T>,
    masks: &Tensor<T>,
) -> Result<(f64, u64)> {
    let n = images.shape().n;
    let scale = 1.0 / masks.shape().len() as f64;
    let mut total = 0.0;
    let mut pattern = 0u64;
    for i in 0..n {
        let mut g = Graph::new(params);
        let x = g.input(images.select(i), "image")?;
        let trace = model.forward_graph(&mut g, x)?;
        total += bce_sum_and_grad(g.value(trace.output), &masks.select(i), 0.0)?.0;
        pattern = pattern.rotate_left(17) ^ g.activation_pattern();
    }
    Ok((total * scale, pattern))
}

/// Owns a model, its parameters and the optimizer state.
pub struct Trainer<T: Float = f32> {
    model: Model,
    params: ParamStore<T>,
    optimizer: Adam<T>,
    config: TrainConfig,
    step: u64,
}

impl<T: Float> Trainer<T> {
    /// Fresh parameters drawn from `config.seed`.
    pub fn new(model: Model, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let params = init_params(&model, &config);
        Self::with_params(model, params, config, 0)
    }

    /// Resumes from existing parameters with a fresh optimizer state.
    pub fn with_params(model: Model, params: ParamStore<T>, config: TrainConfig, step: u64) -> Result<Self> {
        config.validate()?;
        params.check_layout(model.param_specs())?;
        let optimizer = Adam::new(&config, &params);
        Ok(Trainer {
            model,
            params,
            optimizer,
            config,
            step,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One ADAM update on the cross-entropy of `images` against `masks`.
    /// Returns the loss before the update.
    pub fn train_step(&mut self, images: &Tensor<T>, masks: &Tensor<T>) -> Result<f64> {
        let (loss, grads) = loss_and_gradients(&self.model, &self.params, images, masks)?;
        if !grads.all_finite() {
            return Err(Error::NonFinite {
                layer: "gradients".into(),
            });
        }
        self.optimizer.step(&mut self.params, &grads);
        if !self.params.all_finite() {
            return Err(Error::NonFinite {
                layer: "parameters".into(),
            });
        }
        self.step += 1;
        Ok(loss)
    }

    pub fn predict(&self, images: &Tensor<T>) -> Result<Tensor<T>> {
        let outs: Vec<Tensor<T>> = (0..images.shape().n)
            .map(|i| crate::model::model_forward(&self.model, &self.params, &images.select(i)))
            .collect::<Result<_>>()?;
        Tensor::stack(&outs)
    }

    pub fn into_parts(self) -> (Model, ParamStore<T>) {
        (self.model, self.params)
    }
}
