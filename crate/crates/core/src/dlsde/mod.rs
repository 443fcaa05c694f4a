//! The convolutional signal-dimension estimator: input images, the default
//! network, training, inference and the `SDMO` checkpoint format.

mod checkpoint;
mod input;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use input::{build_input, InputMode};
pub use train::{
    holdout_len, read_training_log, train, train_records, write_training_log, EpochLog, TrainOutcome,
    TRAINING_LOG_HEADER,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::nn::{argmax, LayerSpec, Model};
use crate::signal_model::Snapshot;

/// Learning-rate schedule over the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay from `lr` to zero across all optimizer steps.
    Cosine,
}

impl LrSchedule {
    pub fn code(self) -> u8 {
        match self {
            LrSchedule::Constant => 0,
            LrSchedule::Cosine => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(LrSchedule::Constant),
            1 => Ok(LrSchedule::Cosine),
            other => Err(Error::Format(format!("unknown learning-rate schedule {other}"))),
        }
    }

    /// Learning rate for optimizer step `step` (0-based) of `total`.
    pub fn rate(self, base: f64, step: u64, total: u64) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => {
                let t = if total == 0 { 0.0 } else { step as f64 / total as f64 };
                0.5 * base * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

impl fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrSchedule::Constant => "constant",
            LrSchedule::Cosine => "cosine",
        })
    }
}

impl FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "cosine" => Ok(LrSchedule::Cosine),
            other => Err(invalid(format!("unknown schedule '{other}' (constant|cosine)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlsdeConfig {
    pub n_elements: usize,
    pub g_classes: usize,
    pub architecture: Vec<LayerSpec>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub input_mode: InputMode,
    pub schedule: LrSchedule,
}

impl DlsdeConfig {
    /// Full-scale recipe: N = 32, G = 4, batch 1024, 10 000 epochs.
    pub fn full_scale() -> Self {
        Self {
            n_elements: 32,
            g_classes: 4,
            architecture: default_architecture(32, 4).expect("N = 32 is supported"),
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 1024,
            epochs: 10_000,
            seed: 0,
            input_mode: InputMode::Normalized,
            schedule: LrSchedule::Constant,
        }
    }

    /// Settings that train the default network to a usable state on a
    /// 30 000-sample dataset in well under an hour on one CPU core.
    pub fn desk_scale() -> Self {
        Self { batch_size: 64, epochs: 20, schedule: LrSchedule::Cosine, ..Self::full_scale() }
    }

    /// Replaces N and G and rebuilds the default architecture for them.
    pub fn with_shape(mut self, n_elements: usize, g_classes: usize) -> Result<Self> {
        self.n_elements = n_elements;
        self.g_classes = g_classes;
        self.architecture = default_architecture(n_elements, g_classes)?;
        Ok(self)
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [2, self.n_elements, self.n_elements]
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_classes < 1 {
            return Err(invalid("need at least one class"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid(format!("learning rate {} must be positive", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(invalid("Adam needs β₁, β₂ in [0, 1) and ε > 0"));
        }
        let shapes = Model::param_shapes(&self.architecture, &self.input_shape())?;
        let out = shapes.last().map(|s| s[0]).unwrap_or(0);
        if out != self.g_classes || !matches!(self.architecture.last(), Some(LayerSpec::Dense(_))) {
            return Err(Error::Shape(format!("network must end in a dense layer with {} outputs", self.g_classes)));
        }
        Ok(())
    }
}

/// Three stride-downsampling convolutions and two dense layers:
///
/// ```text
/// conv 2→8   3×3 s1 p1, relu
/// conv 8→16  3×3 s2 p1, relu
/// conv 16→32 3×3 s2 p1, relu
/// flatten
/// dense → 128, relu
/// dense 128 → G
/// ```
pub fn default_architecture(n_elements: usize, g_classes: usize) -> Result<Vec<LayerSpec>> {
    if n_elements < 4 {
        return Err(invalid(format!("the default network needs N ≥ 4, got {n_elements}")));
    }
    if g_classes < 1 {
        return Err(invalid("need at least one class"));
    }
    let half = |s: usize| (s - 1) / 2 + 1;
    let side = half(half(n_elements));
    Ok(vec![
        LayerSpec::conv(2, 8, 3, 1, 1),
        LayerSpec::Relu,
        LayerSpec::conv(8, 16, 3, 2, 1),
        LayerSpec::Relu,
        LayerSpec::conv(16, 32, 3, 2, 1),
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::dense(32 * side * side, 128),
        LayerSpec::Relu,
        LayerSpec::dense(128, g_classes),
    ])
}

/// Result of one inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Estimated number of sources, in `1..=G`.
    pub k_hat: usize,
    pub logits: Vec<f64>,
}

/// Classifies one snapshot with a trained checkpoint.
pub fn infer(checkpoint: &Checkpoint, r: &Snapshot) -> Result<Inference> {
    checkpoint.infer(r)
}

/// `1 + argmax(logits)`, ties toward the smaller count.
pub fn k_from_logits(logits: &[f64]) -> usize {
    1 + argmax(logits)
}
