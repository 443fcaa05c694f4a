//! Ground-truth scenario sampling and labelled dataset files.

mod dataset;

pub use dataset::{
    dataset_file_size, read_dataset, write_dataset, DatasetHeader, DatasetReader, DatasetRecord, DatasetWriteOptions,
    DATASET_HEADER_LEN, DATASET_MAGIC, DATASET_VERSION,
};

use std::f64::consts::TAU;

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::signal_model::{synthesize_snapshot_with, ArrayConfig, Snapshot, Source};

/// Rejection-sampling budget for one scenario.
pub const MAX_REJECTIONS: usize = 1_000_000;

/// Distribution of random scenarios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub k_min: usize,
    pub k_max: usize,
    pub doa_lo_deg: f64,
    pub doa_hi_deg: f64,
    pub min_sep_deg: f64,
    pub power_lo_db: f64,
    pub power_hi_db: f64,
    pub snr_db: f64,
    pub equal_power: bool,
    /// When set: exactly two sources spaced by this many degrees.
    pub fixed_sep_deg: Option<f64>,
}

impl ScenarioSpec {
    /// Random-count scenarios: K ∈ [1, 4], DoAs in [−10°, 10°] at least 0.1°
    /// apart, per-source power in [0, 10] dB. This is both the training
    /// distribution and evaluation Case 1.
    pub fn case1(snr_db: f64) -> Self {
        Self {
            k_min: 1,
            k_max: 4,
            doa_lo_deg: -10.0,
            doa_hi_deg: 10.0,
            min_sep_deg: 0.1,
            power_lo_db: 0.0,
            power_hi_db: 10.0,
            snr_db,
            equal_power: false,
            fixed_sep_deg: None,
        }
    }

    /// Case 1 with the DoA interval narrowed to [−5°, 5°].
    pub fn case2(snr_db: f64) -> Self {
        Self { doa_lo_deg: -5.0, doa_hi_deg: 5.0, ..Self::case1(snr_db) }
    }

    /// Default training distribution (Case 1 at 30 dB).
    pub fn training_default() -> Self {
        Self::case1(30.0)
    }

    /// Two equal-power sources at a fixed separation, DoAs in [−10°, 10°].
    pub fn resolution(sep_deg: f64, snr_db: f64) -> Self {
        Self {
            k_min: 2,
            k_max: 2,
            min_sep_deg: 0.0,
            equal_power: true,
            fixed_sep_deg: Some(sep_deg),
            ..Self::case1(snr_db)
        }
    }

    pub fn with_min_sep(mut self, min_sep_deg: f64) -> Self {
        self.min_sep_deg = min_sep_deg;
        self
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    /// Checks the invariants against a class count `g` (use `usize::MAX` to skip that bound).
    pub fn validate(&self, g: usize) -> Result<()> {
        if self.k_min < 1 || self.k_min > self.k_max || self.k_max > g {
            return Err(invalid(format!("source-count range [{}, {}] must satisfy 1 ≤ k_min ≤ k_max ≤ {g}", self.k_min, self.k_max)));
        }
        if !(self.doa_lo_deg < self.doa_hi_deg) || self.doa_lo_deg <= -90.0 || self.doa_hi_deg >= 90.0 {
            return Err(invalid(format!("DoA interval [{}, {}] is empty or leaves (−90°, 90°)", self.doa_lo_deg, self.doa_hi_deg)));
        }
        if !(self.min_sep_deg >= 0.0) {
            return Err(invalid(format!("minimum separation {} must be ≥ 0", self.min_sep_deg)));
        }
        if !(self.power_lo_db <= self.power_hi_db) || !self.power_lo_db.is_finite() || !self.power_hi_db.is_finite() {
            return Err(invalid(format!("power range [{}, {}] dB is invalid", self.power_lo_db, self.power_hi_db)));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(invalid(format!("SNR {} dB is invalid", self.snr_db)));
        }
        let width = self.doa_hi_deg - self.doa_lo_deg;
        match self.fixed_sep_deg {
            Some(sep) => {
                if !(sep >= 0.0 && sep <= width) {
                    return Err(invalid(format!("fixed separation {sep}° does not fit in a {width}° interval")));
                }
            }
            None => {
                if (self.k_max - 1) as f64 * self.min_sep_deg >= width {
                    return Err(invalid(format!(
                        "{} sources at least {}° apart do not fit in a {width}° interval",
                        self.k_max, self.min_sep_deg
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One trial's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub k: usize,
    pub sources: Vec<Source>,
    pub snr_db: f64,
}

impl Scenario {
    pub fn snapshot<R: Rng + ?Sized>(&self, array: &ArrayConfig, rng: &mut R) -> Result<Snapshot> {
        synthesize_snapshot_with(array, &self.sources, self.snr_db, rng)
    }

    pub fn min_separation(&self) -> f64 {
        let mut d: Vec<f64> = self.sources.iter().map(|s| s.doa_deg).collect();
        d.sort_by(f64::total_cmp);
        d.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

fn separated(doas: &[f64], min_sep: f64) -> bool {
    for (i, a) in doas.iter().enumerate() {
        for b in &doas[i + 1..] {
            if (a - b).abs() < min_sep {
                return false;
            }
        }
    }
    true
}

/// Draws one scenario. DoA sets violating the separation constraint are
/// discarded and redrawn whole.
pub fn sample_scenario<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Scenario> {
    spec.validate(usize::MAX)?;
    let (doas, k) = match spec.fixed_sep_deg {
        Some(sep) => {
            let first = rng.gen_range(spec.doa_lo_deg..=spec.doa_hi_deg - sep);
            (vec![first, first + sep], 2)
        }
        None => {
            let k = rng.gen_range(spec.k_min..=spec.k_max);
            let mut attempts = 0;
            loop {
                let doas: Vec<f64> = (0..k).map(|_| rng.gen_range(spec.doa_lo_deg..=spec.doa_hi_deg)).collect();
                if separated(&doas, spec.min_sep_deg) {
                    break (doas, k);
                }
                attempts += 1;
                if attempts >= MAX_REJECTIONS {
                    return Err(Error::Infeasible(attempts));
                }
            }
        }
    };
    let sources = doas
        .into_iter()
        .map(|doa| {
            let power_db = if spec.equal_power {
                0.0
            } else if spec.power_lo_db == spec.power_hi_db {
                spec.power_lo_db
            } else {
                rng.gen_range(spec.power_lo_db..=spec.power_hi_db)
            };
            let phase = rng.gen_range(0.0..TAU);
            Source::with_power_db(doa, power_db, phase)
        })
        .collect();
    Ok(Scenario { k, sources, snr_db: spec.snr_db })
}

/// 0-based class index `k − 1` for a `g`-class classifier.
pub fn build_label(scenario: &Scenario, g_classes: usize) -> Result<usize> {
    label_for(scenario.k, g_classes)
}

pub fn label_for(k: usize, g_classes: usize) -> Result<usize> {
    if k < 1 || k > g_classes {
        return Err(Error::LabelOutOfRange { k, g: g_classes });
    }
    Ok(k - 1)
}
