//! Central finite-difference check of the analytic gradient.

use super::backprop::{loss, loss_and_grad};
use super::params::Params;
use super::FusionModel;
use crate::error::{Error, Result};

/// Magnitude below which gradient entries are compared absolutely.
pub const GRAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic - numeric| / max(|analytic|, |numeric|, GRAD_FLOOR)`.
    pub max_relative_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
    pub parameters: usize,
}

/// Checks the backward pass of `model` on one example.
pub fn grad_check(model: &FusionModel, inputs: &[&[f64]], label: usize, epsilon: f64) -> Result<GradCheckReport> {
    grad_check_with(model, inputs, label, epsilon, |params, x, y| {
        let mut g = params.zeros_like();
        loss_and_grad(params, x, y, &mut g);
        g
    })
}

/// Like [`grad_check`] with a caller-supplied analytic gradient.
pub fn grad_check_with<F>(
    model: &FusionModel,
    inputs: &[&[f64]],
    label: usize,
    epsilon: f64,
    analytic: F,
) -> Result<GradCheckReport>
where
    F: Fn(&Params, &[&[f64]], usize) -> Params,
{
    if !(1e-6..=1e-2).contains(&epsilon) {
        return Err(Error::Config(alloc::format!("epsilon {epsilon} outside [1e-6, 1e-2]")));
    }
    if label >= model.num_classes() {
        return Err(Error::ClassOutOfRange {
            class: label,
            classes: model.num_classes(),
        });
    }
    let mut grads = analytic(&model.params, inputs, label);
    let mut probe = model.params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_abs_analytic: 0.0,
        max_abs_numeric: 0.0,
        parameters: 0,
    };
    let count = probe.tensors_mut().len();
    for t in 0..count {
        let len = probe.tensors_mut()[t].data.len();
        for i in 0..len {
            let original = probe.tensors_mut()[t].data[i];
            probe.tensors_mut()[t].data[i] = original + epsilon;
            let up = loss(&probe, inputs, label);
            probe.tensors_mut()[t].data[i] = original - epsilon;
            let down = loss(&probe, inputs, label);
            probe.tensors_mut()[t].data[i] = original;

            let numeric = (up - down) / (2.0 * epsilon);
            let a = grads.tensors_mut()[t].data[i];
            let denom = a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            let rel = (a - numeric).abs() / denom;
            report.max_relative_error = report.max_relative_error.max(rel);
            report.max_abs_analytic = report.max_abs_analytic.max(a.abs());
            report.max_abs_numeric = report.max_abs_numeric.max(numeric.abs());
            report.parameters += 1;
        }
    }
    Ok(report)
}
