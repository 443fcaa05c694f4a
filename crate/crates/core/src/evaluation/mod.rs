//! Monte Carlo success-rate sweeps over SNR or source separation.
//!
//! Every trial draws its scenario and noise from the stream
//! `(seed, Evaluation, point, trial)` and feeds the same snapshot to every
//! selected estimator. Results do not depend on the thread count.

mod plot;
mod report;

pub use plot::{render_svg, write_svg};
pub use report::{
    compare_report, monotonicity_violations, read_report, wilson_interval, write_report, AxisKind, EvalReport,
    PointDiff, ReportRow, REPORT_HEADER, Z_95,
};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dlsde::{load_checkpoint, Checkpoint};
use crate::error::{invalid, Error, Result};
use crate::ic::{estimate_all, IcConfig, IcVariant};
use crate::io::atomic_write_bytes;
use crate::linalg::SmoothingConfig;
use crate::rng::{stream, Domain};
use crate::scenario::{sample_scenario, ScenarioSpec};
use crate::signal_model::ArrayConfig;

/// Trials per point used by the original study.
pub const DEFAULT_TRIALS: usize = 20_000;
/// Trials per point in fast mode.
pub const FAST_TRIALS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EstimatorKind {
    Aic,
    Mdl,
    Gic,
    Dlsde,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [EstimatorKind::Aic, EstimatorKind::Mdl, EstimatorKind::Gic, EstimatorKind::Dlsde];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Aic => "AIC",
            EstimatorKind::Mdl => "MDL",
            EstimatorKind::Gic => "GIC",
            EstimatorKind::Dlsde => "DLSDE",
        }
    }

    fn ic_index(self) -> Option<usize> {
        IcVariant::ALL.iter().position(|v| v.name().eq_ignore_ascii_case(self.name()))
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid(format!("unknown estimator '{s}' (aic|mdl|gic|dlsde)")))
    }
}

/// Parses a comma-separated estimator list, keeping order and dropping repeats.
pub fn parse_estimators(list: &str) -> Result<Vec<EstimatorKind>> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let e: EstimatorKind = item.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if out.is_empty() {
        return Err(invalid("empty estimator list"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepAxis {
    /// SNR points in dB; each point overrides the scenario's SNR.
    Snr(Vec<f64>),
    /// Separations in degrees; each point overrides the scenario's fixed separation.
    Separation(Vec<f64>),
}

impl SweepAxis {
    pub fn kind(&self) -> AxisKind {
        match self {
            SweepAxis::Snr(_) => AxisKind::SnrDb,
            SweepAxis::Separation(_) => AxisKind::SepDeg,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::Snr(v) | SweepAxis::Separation(v) => v,
        }
    }

    fn spec_at(&self, base: &ScenarioSpec, i: usize) -> ScenarioSpec {
        match self {
            SweepAxis::Snr(v) => base.clone().with_snr(v[i]),
            SweepAxis::Separation(v) => ScenarioSpec { fixed_sep_deg: Some(v[i]), ..base.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub estimators: Vec<EstimatorKind>,
    pub spec: ScenarioSpec,
    pub array: ArrayConfig,
    pub trials_per_point: usize,
    pub axis: SweepAxis,
    pub m: usize,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(estimators: Vec<EstimatorKind>, spec: ScenarioSpec, axis: SweepAxis) -> Self {
        Self {
            estimators,
            spec,
            array: ArrayConfig::half_wavelength(32).expect("32 elements is valid"),
            trials_per_point: DEFAULT_TRIALS,
            axis,
            m: SmoothingConfig::DEFAULT_M,
            checkpoint: None,
            seed: 0,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(invalid("trials per point must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators selected"));
        }
        if self.axis.values().is_empty() {
            return Err(invalid("empty sweep axis"));
        }
        if self.axis.values().iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep axis values must be finite"));
        }
        self.array.validate()?;
        for i in 0..self.axis.values().len() {
            self.axis.spec_at(&self.spec, i).validate(usize::MAX)?;
        }
        if self.estimators.iter().any(|e| e.ic_index().is_some()) {
            SmoothingConfig::new(self.m, self.array.n_elements, self.spec.k_max)?;
        }
        Ok(())
    }
}

/// Ground truth and per-estimator outputs of one trial. `k_hats[i]` belongs to
/// `estimators[i]` and is `Err` with a message when that estimator failed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub k: usize,
    pub k_hats: Vec<std::result::Result<usize, String>>,
}

impl TrialOutcome {
    pub fn success(&self, i: usize) -> bool {
        self.k_hats[i] == Ok(self.k)
    }
}

/// Runs trial `trial` of axis point `point` in isolation.
pub fn run_trial(cfg: &SweepConfig, model: Option<&Checkpoint>, point: usize, trial: usize) -> Result<TrialOutcome> {
    let spec = cfg.axis.spec_at(&cfg.spec, point);
    let mut rng = stream(cfg.seed, Domain::Evaluation, point as u64, trial as u64);
    let scenario = sample_scenario(&spec, &mut rng)?;
    let r = scenario.snapshot(&cfg.array, &mut rng)?;
    let needs_ic = cfg.estimators.iter().any(|e| e.ic_index().is_some());
    let ic = if needs_ic {
        Some(estimate_all(&r, &IcConfig::new(IcVariant::Aic, cfg.m)).map_err(|e| e.to_string()))
    } else {
        None
    };
    let k_hats = cfg
        .estimators
        .iter()
        .map(|e| match (e.ic_index(), &ic) {
            (Some(i), Some(res)) => res.as_ref().map(|all| all[i].k_hat).map_err(Clone::clone),
            _ => match model {
                Some(m) => m.infer(&r).map(|inf| inf.k_hat).map_err(|e| e.to_string()),
                None => Err("no DLSDE checkpoint loaded".to_string()),
            },
        })
        .collect();
    Ok(TrialOutcome { k: scenario.k, k_hats })
}

fn run_sweep(cfg: &SweepConfig, model: Option<&Checkpoint>) -> Result<EvalReport> {
    cfg.validate()?;
    let owned;
    let model = match (model, &cfg.checkpoint) {
        (Some(m), _) => Some(m),
        (None, Some(p)) if cfg.estimators.contains(&EstimatorKind::Dlsde) => {
            owned = load_checkpoint(p)?;
            Some(&owned)
        }
        _ => None,
    };
    if cfg.estimators.contains(&EstimatorKind::Dlsde) {
        match model {
            None => return Err(invalid("DLSDE selected but no checkpoint given")),
            Some(m) if m.config().n_elements != cfg.array.n_elements => {
                return Err(Error::Shape(format!(
                    "checkpoint expects N = {}, sweep uses N = {}",
                    m.config().n_elements,
                    cfg.array.n_elements
                )))
            }
            _ => {}
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let n_est = cfg.estimators.len();
    let mut counts = vec![vec![(0usize, 0usize); cfg.axis.values().len()]; n_est];
    for point in 0..cfg.axis.values().len() {
        let outcomes: Vec<Result<TrialOutcome>> =
            pool.install(|| (0..cfg.trials_per_point).into_par_iter().map(|t| run_trial(cfg, model, point, t)).collect());
        for outcome in outcomes {
            let outcome = outcome?;
            for (e, slot) in counts.iter_mut().enumerate() {
                let c = &mut slot[point];
                match &outcome.k_hats[e] {
                    Ok(k) if *k == outcome.k => c.0 += 1,
                    Ok(_) => {}
                    Err(_) => c.1 += 1,
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(n_est * cfg.axis.values().len());
    for (e, est) in cfg.estimators.iter().enumerate() {
        for (p, &x) in cfg.axis.values().iter().enumerate() {
            let (successes, errors) = counts[e][p];
            rows.push(ReportRow {
                estimator: est.name().to_string(),
                axis_value: x,
                successes,
                trials: cfg.trials_per_point,
                errors,
            });
        }
    }
    Ok(EvalReport { axis: cfg.axis.kind(), rows })
}

/// Success rate against SNR.
pub fn run_snr_sweep(cfg: &SweepConfig, model: Option<&Checkpoint>) -> Result<EvalReport> {
    if !matches!(cfg.axis, SweepAxis::Snr(_)) {
        return Err(invalid("an SNR sweep needs an SNR axis"));
    }
    run_sweep(cfg, model)
}

/// Success rate (`k_hat == 2`) against the separation of two equal-power sources.
pub fn run_resolution_sweep(cfg: &SweepConfig, model: Option<&Checkpoint>) -> Result<EvalReport> {
    if !matches!(cfg.axis, SweepAxis::Separation(_)) {
        return Err(invalid("a resolution sweep needs a separation axis"));
    }
    let s = &cfg.spec;
    if s.k_min != 2 || s.k_max != 2 || !s.equal_power || s.fixed_sep_deg.is_none() {
        return Err(invalid("a resolution sweep needs the two-source equal-power fixed-separation scenario"));
    }
    run_sweep(cfg, model)
}

/// Identifies the code that produced a report.
pub fn build_id() -> String {
    match option_env!("SIGDIM_GIT_DESCRIBE") {
        Some(git) => format!("sigdim {} ({git})", env!("CARGO_PKG_VERSION")),
        None => format!("sigdim {}", env!("CARGO_PKG_VERSION")),
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    build: String,
    config: &'a SweepConfig,
    rows: &'a [ReportRow],
}

/// JSON echo of the configuration, seed, build and per-row error counts.
pub fn report_metadata(cfg: &SweepConfig, report: &EvalReport) -> String {
    let meta = Metadata { build: build_id(), config: cfg, rows: &report.rows };
    serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"
}

/// Sidecar path for a report: `<report>.meta.json`.
pub fn metadata_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_metadata(path: &Path, cfg: &SweepConfig, report: &EvalReport) -> Result<()> {
    atomic_write_bytes(path, report_metadata(cfg, report).as_bytes())
}

/// Parses `lo:hi:step` (inclusive of `hi` up to rounding), a comma list, or a single value.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' in '{text}'")));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.len() {
        1 => text.split(',').map(num).collect::<Result<Vec<_>>>()?,
        3 => {
            let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || hi < lo {
                return Err(Error::Parse(format!("range '{text}' needs lo ≤ hi and step > 0")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| lo + i as f64 * step).map(|v| (v * 1e9).round() / 1e9).collect()
        }
        _ => return Err(Error::Parse(format!("expected lo:hi:step or a list, got '{text}'"))),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("no usable values in '{text}'")));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-5:30:5").unwrap(), vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(parse_range("0.2:1:0.2").unwrap(), vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(parse_range("15").unwrap(), vec![15.0]);
        assert_eq!(parse_range("1,3").unwrap(), vec![1.0, 3.0]);
        assert!(parse_range("3:1:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("a").is_err());
    }

    #[test]
    fn estimator_lists() {
        assert_eq!(parse_estimators("aic,MDL,gic,aic").unwrap(), vec![EstimatorKind::Aic, EstimatorKind::Mdl, EstimatorKind::Gic]);
        assert!(parse_estimators("foo").is_err());
        assert!(parse_estimators("").is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        let mut cfg = SweepConfig::new(vec![EstimatorKind::Mdl], ScenarioSpec::case1(0.0), SweepAxis::Snr(vec![0.0]));
        cfg.trials_per_point = 0;
        assert!(run_snr_sweep(&cfg, None).is_err());
    }

    #[test]
    fn dlsde_needs_model() {
        let cfg = SweepConfig::new(vec![EstimatorKind::Dlsde], ScenarioSpec::case1(0.0), SweepAxis::Snr(vec![0.0]));
        assert!(run_snr_sweep(&cfg, None).is_err());
    }

    #[test]
    fn single_trial_rerun_matches_sweep() {
        let mut cfg = SweepConfig::new(vec![EstimatorKind::Mdl, EstimatorKind::Gic], ScenarioSpec::case1(10.0), SweepAxis::Snr(vec![10.0, 20.0]));
        cfg.trials_per_point = 30;
        cfg.seed = 4;
        let report = run_snr_sweep(&cfg, None).unwrap();
        let mdl_20: usize = (0..30).filter(|&t| run_trial(&cfg, None, 1, t).unwrap().success(0)).count();
        assert_eq!(report.row("MDL", 20.0).unwrap().successes, mdl_20);
    }

    #[test]
    fn metadata_echoes_seed() {
        let mut cfg = SweepConfig::new(vec![EstimatorKind::Aic], ScenarioSpec::case1(10.0), SweepAxis::Snr(vec![10.0]));
        cfg.trials_per_point = 3;
        cfg.seed = 987_654;
        let report = run_snr_sweep(&cfg, None).unwrap();
        let meta = report_metadata(&cfg, &report);
        assert!(meta.contains("987654"));
        assert!(meta.contains(&build_id()));
        assert_eq!(metadata_path(Path::new("a/r.csv")), PathBuf::from("a/r.csv.meta.json"));
    }
}
