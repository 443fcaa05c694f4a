//! Central-difference verification of [`Model`] gradients.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::Result;

use super::layers::LayerSpec;
use super::model::Model;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Fraction of each parameter tensor's entries to probe.
    pub sample_fraction: f64,
    /// Optional cap on probes per tensor, for large layers.
    pub max_per_tensor: Option<usize>,
    /// Gradients smaller than this are compared in absolute terms.
    pub abs_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { step: 1e-5, tolerance: 1e-4, sample_fraction: 0.05, max_per_tensor: None, abs_floor: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub probes: Vec<ProbeResult>,
    /// Probes discarded because the ±step perturbation moved a ReLU input across zero.
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        !self.probes.is_empty() && self.max_rel_error < self.tolerance
    }

    pub fn max_rel_error_for(&self, tensor: usize) -> f64 {
        self.probes.iter().filter(|p| p.tensor == tensor).map(|p| p.rel_error).fold(0.0, f64::max)
    }
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Signs of every ReLU input for one forward pass.
fn relu_pattern(model: &Model, input: &Tensor) -> Result<Vec<bool>> {
    let cache = model.forward_cached(input)?;
    let mut out = Vec::new();
    for (layer, x) in model.layers().iter().zip(&cache.inputs) {
        if matches!(layer, LayerSpec::Relu) {
            out.extend(x.data().iter().map(|&v| v > 0.0));
        }
    }
    Ok(out)
}

/// Compares analytic gradients of the cross-entropy loss on `(input, label)`
/// against central differences on a random subset of parameters.
pub fn grad_check<R: Rng + ?Sized>(
    model: &Model,
    input: &Tensor,
    label: usize,
    cfg: &GradCheckConfig,
    rng: &mut R,
) -> Result<GradCheckReport> {
    let batch = input.clone().reshape(&[&[1], input.shape()].concat())?;
    let (_, grads, _) = model.loss_and_grads(&batch, &[label])?;
    let base_pattern = relu_pattern(model, input)?;

    let mut probe = model.clone();
    let mut report = GradCheckReport { tolerance: cfg.tolerance, ..Default::default() };
    for (t, grad) in grads.iter().enumerate() {
        let n = grad.len();
        let mut count = ((n as f64 * cfg.sample_fraction).ceil() as usize).clamp(1, n);
        if let Some(cap) = cfg.max_per_tensor {
            count = count.min(cap.max(1));
        }
        for index in sample(rng, n, count) {
            let original = probe.params()[t].data()[index];
            probe.params_mut()[t].data_mut()[index] = original + cfg.step;
            let plus = probe.loss(input, label)?;
            let plus_pattern = relu_pattern(&probe, input)?;
            probe.params_mut()[t].data_mut()[index] = original - cfg.step;
            let minus = probe.loss(input, label)?;
            let minus_pattern = relu_pattern(&probe, input)?;
            probe.params_mut()[t].data_mut()[index] = original;

            if plus_pattern != base_pattern || minus_pattern != base_pattern {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * cfg.step);
            let analytic = grad.data()[index];
            let rel_error = relative_error(analytic, numeric, cfg.abs_floor);
            report.max_rel_error = report.max_rel_error.max(rel_error);
            report.probes.push(ProbeResult { tensor: t, index, analytic, numeric, rel_error });
        }
    }
    Ok(report)
}
