use crate::error::{Error, Result};
use crate::tensor::{Float, Tensor};

/// Predictions are clamped to `[BCE_EPSILON, 1 − BCE_EPSILON]` inside the
/// loss so the logarithms stay finite.
pub const BCE_EPSILON: f64 = 1e-7;

fn check<T: Float>(z: &Tensor<T>, y: &Tensor<T>) -> Result<()> {
    if z.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "prediction {} and target {} differ in shape",
            z.shape(),
            y.shape()
        )));
    }
    if let Some(bad) = y.data().iter().find(|&&v| v != T::ZERO && v != T::ONE) {
        return Err(Error::InvalidArgument(format!(
            "target values must be 0 or 1, found {bad}"
        )));
    }
    Ok(())
}

/// Summed cross-entropy and its gradient with respect to `z`.
pub(crate) fn bce_sum_and_grad<T: Float>(z: &Tensor<T>, y: &Tensor<T>, grad_scale: f64) -> Result<(f64, Tensor<T>)> {
    check(z, y)?;
    let mut grad = Tensor::zeros(z.shape());
    let mut total = 0.0f64;
    for ((g, &zi), &yi) in grad.data_mut().iter_mut().zip(z.data()).zip(y.data()) {
        let raw = zi.to_f64();
        let zc = raw.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        let target = yi.to_f64();
        total -= target * zc.ln() + (1.0 - target) * (1.0 - zc).ln();
        // Inside the clamp the derivative is −y/z + (1−y)/(1−z); outside it is 0.
        if raw > BCE_EPSILON && raw < 1.0 - BCE_EPSILON {
            *g = T::from_f64(grad_scale * (-target / zc + (1.0 - target) / (1.0 - zc)));
        }
    }
    Ok((total, grad))
}

/// Mean binary cross-entropy `−(y·ln z + (1−y)·ln(1−z))` over every element.
pub fn bce_loss<T: Float>(z: &Tensor<T>, y: &Tensor<T>) -> Result<f64> {
    let n = z.shape().len() as f64;
    let (sum, _) = bce_sum_and_grad(z, y, 0.0)?;
    Ok(sum / n)
}

/// [`bce_loss`] together with d(loss)/dz.
pub fn bce_loss_with_grad<T: Float>(z: &Tensor<T>, y: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    let n = z.shape().len() as f64;
    let (sum, grad) = bce_sum_and_grad(z, y, 1.0 / n)?;
    Ok((sum / n, grad))
}
