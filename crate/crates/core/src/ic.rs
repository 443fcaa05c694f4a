//! Information-criterion signal-dimension estimators (AIC, MDL, GIC).
//!
//! All three operate on the eigenvalues `λ_1 ≥ … ≥ λ_N'` of the spatially
//! smoothed covariance and minimise, over `k ∈ [0, N')`,
//!
//! ```text
//! score(k) = M·(N'−k)·S(k) + penalty(k)
//! S(k)     = ln( mean(λ_{k+1..N'}) / geomean(λ_{k+1..N'}) )
//! ```
//!
//! | criterion | penalty(k)                      |
//! |-----------|---------------------------------|
//! | AIC       | `k·(2N'−k)`                     |
//! | MDL       | `½·(k·(2N'−k)+1)·ln M`          |
//! | GIC       | `α(M)·(2N'−k)·k`, `α(M) = √M`   |
//!
//! Two literal alternatives are kept for comparison: [`IcConfig::aic_as_printed`]
//! uses the multiplier `M·(N'−1)` instead of `M·(N'−k)` in AIC, and
//! [`IcConfig::gic_as_printed`] replaces `S(k)` in GIC by the log of the
//! arithmetic mean alone. Neither is the default: the first makes the data term
//! weight inconsistent across `k`, the second is not scale invariant.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::linalg::{eigvals_hermitian, smoothed_covariance, EigenSpectrum};
use crate::signal_model::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IcVariant {
    Aic,
    Mdl,
    Gic,
}

impl IcVariant {
    pub const ALL: [IcVariant; 3] = [IcVariant::Aic, IcVariant::Mdl, IcVariant::Gic];

    pub fn name(self) -> &'static str {
        match self {
            IcVariant::Aic => "aic",
            IcVariant::Mdl => "mdl",
            IcVariant::Gic => "gic",
        }
    }
}

impl fmt::Display for IcVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IcVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(IcVariant::Aic),
            "mdl" => Ok(IcVariant::Mdl),
            "gic" => Ok(IcVariant::Gic),
            other => Err(invalid(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Default GIC penalty weight `α(M) = √M`.
pub fn sqrt_penalty(m: usize) -> f64 {
    (m as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct IcConfig {
    pub m: usize,
    pub variant: IcVariant,
    pub gic_penalty: fn(usize) -> f64,
    /// Relative eigenvalue floor applied before taking logs.
    pub eig_floor: f64,
    pub aic_as_printed: bool,
    pub gic_as_printed: bool,
}

impl IcConfig {
    pub fn new(variant: IcVariant, m: usize) -> Self {
        Self { m, variant, gic_penalty: sqrt_penalty, eig_floor: 1e-12, aic_as_printed: false, gic_as_printed: false }
    }

    pub fn validate(&self, n_elements: usize) -> Result<()> {
        if self.m == 0 || self.m > n_elements {
            return Err(invalid(format!("smoothing length {} outside 1..={n_elements}", self.m)));
        }
        let alpha = (self.gic_penalty)(self.m);
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("GIC penalty α({}) = {alpha} must be positive", self.m)));
        }
        if !(self.eig_floor >= 0.0 && self.eig_floor < 1.0) {
            return Err(invalid(format!("eigenvalue floor {} outside [0, 1)", self.eig_floor)));
        }
        Ok(())
    }
}

/// Criterion value for each candidate `k = 0..N'`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcScoreTable {
    pub scores: Vec<f64>,
    pub argmin_k: usize,
}

impl IcScoreTable {
    fn from_scores(scores: Vec<f64>) -> Self {
        let mut argmin_k = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s < scores[argmin_k] {
                argmin_k = k;
            }
        }
        Self { scores, argmin_k }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcEstimate {
    pub k_hat: usize,
    pub table: IcScoreTable,
    pub spectrum: EigenSpectrum,
}

fn floored(lambdas: &EigenSpectrum, eig_floor: f64) -> Result<Vec<f64>> {
    let top = lambdas.largest();
    if !(top > 0.0) {
        return Err(Error::ZeroSpectrum);
    }
    let floor = eig_floor * top;
    Ok(lambdas.values.iter().map(|&l| l.max(floor)).collect())
}

fn sphericity_floored(lambdas: &[f64], k: usize) -> f64 {
    let tail = &lambdas[k..];
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let mean_log = tail.iter().map(|l| l.ln()).sum::<f64>() / n;
    (mean.ln() - mean_log).max(0.0)
}

/// `ln(arithmetic mean / geometric mean)` of the eigenvalues after the first `k`.
pub fn sphericity_term(lambdas: &EigenSpectrum, k: usize, eig_floor: f64) -> Result<f64> {
    if k >= lambdas.len() {
        return Err(invalid(format!("k = {k} must be below N' = {}", lambdas.len())));
    }
    Ok(sphericity_floored(&floored(lambdas, eig_floor)?, k))
}

/// Score table for a given eigenvalue spectrum (the spectrum of `R̂_s` for window length `cfg.m`).
pub fn score_spectrum(lambdas: &EigenSpectrum, cfg: &IcConfig) -> Result<IcScoreTable> {
    let n_sub = lambdas.len();
    if n_sub == 0 {
        return Err(invalid("empty spectrum"));
    }
    let lam = floored(lambdas, cfg.eig_floor)?;
    let m = cfg.m as f64;
    let np = n_sub as f64;
    let scores = (0..n_sub)
        .map(|k| {
            let kf = k as f64;
            let dof = kf * (2.0 * np - kf);
            match cfg.variant {
                IcVariant::Aic => {
                    let weight = if cfg.aic_as_printed { m * (np - 1.0) } else { m * (np - kf) };
                    weight * sphericity_floored(&lam, k) + dof
                }
                IcVariant::Mdl => m * (np - kf) * sphericity_floored(&lam, k) + 0.5 * (dof + 1.0) * m.ln(),
                IcVariant::Gic => {
                    let data = if cfg.gic_as_printed {
                        let tail = &lam[k..];
                        (tail.iter().sum::<f64>() / tail.len() as f64).ln()
                    } else {
                        sphericity_floored(&lam, k)
                    };
                    m * (np - kf) * data + (cfg.gic_penalty)(cfg.m) * (2.0 * np - kf) * kf
                }
            }
        })
        .collect();
    Ok(IcScoreTable::from_scores(scores))
}

/// Runs the configured criterion on one snapshot.
pub fn estimate(r: &Snapshot, cfg: &IcConfig) -> Result<IcEstimate> {
    cfg.validate(r.len())?;
    let cov = smoothed_covariance(r, cfg.m)?;
    let spectrum = eigvals_hermitian(&cov)?;
    let table = score_spectrum(&spectrum, cfg)?;
    Ok(IcEstimate { k_hat: table.argmin_k, table, spectrum })
}

pub fn estimate_aic(r: &Snapshot, cfg: &IcConfig) -> Result<IcEstimate> {
    estimate(r, &IcConfig { variant: IcVariant::Aic, ..*cfg })
}

pub fn estimate_mdl(r: &Snapshot, cfg: &IcConfig) -> Result<IcEstimate> {
    estimate(r, &IcConfig { variant: IcVariant::Mdl, ..*cfg })
}

pub fn estimate_gic(r: &Snapshot, cfg: &IcConfig) -> Result<IcEstimate> {
    estimate(r, &IcConfig { variant: IcVariant::Gic, ..*cfg })
}

/// All three criteria on one snapshot, sharing a single eigendecomposition.
pub fn estimate_all(r: &Snapshot, base: &IcConfig) -> Result<[IcEstimate; 3]> {
    base.validate(r.len())?;
    let cov = smoothed_covariance(r, base.m)?;
    let spectrum = eigvals_hermitian(&cov)?;
    let run = |variant| -> Result<IcEstimate> {
        let table = score_spectrum(&spectrum, &IcConfig { variant, ..*base })?;
        Ok(IcEstimate { k_hat: table.argmin_k, table, spectrum: spectrum.clone() })
    };
    Ok([run(IcVariant::Aic)?, run(IcVariant::Mdl)?, run(IcVariant::Gic)?])
}
