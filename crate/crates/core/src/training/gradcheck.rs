//! Central finite-difference verification of analytic gradients.
//!
//! ReLU and max-pooling make the loss piecewise smooth. A central
//! difference whose two probes fall on different pieces measures a secant
//! across a kink rather than the derivative, so every probe also reports
//! which piece it landed on. Coordinates whose probes disagree with the
//! unperturbed point are counted as kink crossings and kept out of the
//! headline error; their worst error is still reported.

use crate::error::Result;
use crate::model::Model;
use crate::params::ParamStore;
use crate::tensor::Tensor;

use super::trainer::{batch_loss_and_pattern, loss_and_gradients};

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor of the relative error. Below this magnitude the
/// round-off of a central difference at [`FD_STEP`] (about 1e-10 in 64-bit
/// arithmetic) dominates, so such coordinates are judged by absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Loss at a parameter setting and the smooth piece it lies on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub loss: f64,
    pub pattern: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest error over coordinates whose probes stay on one piece.
    pub max_relative_error: f64,
    /// Parameter name and flat index of that coordinate.
    pub worst: Option<(String, usize)>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub coordinates_checked: usize,
    /// Coordinates whose ±step probes crossed a kink.
    pub kink_crossings: usize,
    pub max_relative_error_at_kinks: f64,
}

/// `|a − n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares `analytic` against central differences of `probe` for every
/// scalar parameter.
pub fn check_gradients<F>(
    params: &ParamStore<f64>,
    analytic: &ParamStore<f64>,
    step: f64,
    mut probe: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore<f64>) -> Result<Probe>,
{
    let base = probe(params)?.pattern;
    let mut moved = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        coordinates_checked: 0,
        kink_crossings: 0,
        max_relative_error_at_kinks: 0.0,
    };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let id = moved.id(&name).expect("name taken from the store");
        let grad = &analytic.get(&name).expect("gradient layout matches parameters").data;
        for (i, &analytic_i) in grad.iter().enumerate() {
            let original = moved.by_id(id).data[i];
            moved.by_id_mut(id).data[i] = original + step;
            let up = probe(&moved)?;
            moved.by_id_mut(id).data[i] = original - step;
            let down = probe(&moved)?;
            moved.by_id_mut(id).data[i] = original;
            let numeric = (up.loss - down.loss) / (2.0 * step);
            let err = relative_error(analytic_i, numeric);
            report.coordinates_checked += 1;
            if up.pattern != base || down.pattern != base {
                report.kink_crossings += 1;
                report.max_relative_error_at_kinks = report.max_relative_error_at_kinks.max(err);
            } else if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = err;
                report.worst = Some((name.clone(), i));
                report.analytic_at_worst = analytic_i;
                report.numeric_at_worst = numeric;
            }
        }
    }
    Ok(report)
}

/// Verifies back-propagation through the whole network on one batch in
/// 64-bit arithmetic. Intended for tiny configurations.
pub fn gradient_check(
    model: &Model,
    params: &ParamStore<f64>,
    images: &Tensor<f64>,
    masks: &Tensor<f64>,
) -> Result<GradCheckReport> {
    let (_, analytic) = loss_and_gradients(model, params, images, masks)?;
    check_gradients(params, &analytic, FD_STEP, |p| {
        let (loss, pattern) = batch_loss_and_pattern(model, p, images, masks)?;
        Ok(Probe { loss, pattern })
    })
}
