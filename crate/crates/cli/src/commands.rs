use std::path::{Path, PathBuf};

use sigdim::dlsde::{self, DlsdeConfig, InputMode, LrSchedule};
use sigdim::error::{Error, Result};
use sigdim::evaluation::{
    self, metadata_path, parse_estimators, parse_range, read_report, write_metadata, write_report, write_svg,
    EstimatorKind, SweepAxis, SweepConfig, FAST_TRIALS,
};
use sigdim::ic::{estimate_all, IcConfig, IcVariant};
use sigdim::io::read_snapshot;
use sigdim::linalg::SmoothingConfig;
use sigdim::scenario::{write_dataset, DatasetWriteOptions, ScenarioSpec};
use sigdim::signal_model::ArrayConfig;

use crate::args::*;

/// Invalid flag values are usage errors (exit 1); everything after
/// validation is a runtime failure (exit 2).
pub enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Usage)
}

type Outcome = std::result::Result<(), Failure>;

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Datagen(a) => datagen(a),
        Command::Train(a) => train(a),
        Command::EvalSnr(a) => eval_snr(a),
        Command::EvalResolution(a) => eval_resolution(a),
        Command::Infer(a) => infer(a),
        Command::Plot(a) => plot(a),
    }
}

fn base_spec(case: Case, snr: f64) -> ScenarioSpec {
    match case {
        Case::One => ScenarioSpec::case1(snr),
        Case::Two => ScenarioSpec::case2(snr),
    }
}

fn scenario_spec(a: &ScenarioArgs, snr: f64) -> ScenarioSpec {
    ScenarioSpec {
        k_min: a.k_min,
        k_max: a.k_max,
        power_lo_db: a.power_lo,
        power_hi_db: a.power_hi,
        ..base_spec(a.case, snr).with_min_sep(a.min_sep)
    }
}

fn datagen(a: DatagenArgs) -> Outcome {
    let opts = DatasetWriteOptions {
        spec: scenario_spec(&a.scenario, a.snr),
        array: usage(ArrayConfig::new(a.n, a.spacing))?,
        g_classes: a.g,
        count: a.count,
        seed: a.seed,
        input_mode: usage(a.input_mode.parse())?,
        raw_dump: a.raw_dump,
    };
    usage(opts.spec.validate(opts.g_classes))?;
    if opts.count == 0 {
        return Err(Failure::Usage(Error::InvalidArgument("--count must be at least 1".into())));
    }
    let header = write_dataset(&a.out, &opts)?;
    eprintln!(
        "wrote {} records (N = {}, G = {}) to {}",
        header.record_count,
        header.n_elements,
        header.g_classes,
        a.out.display()
    );
    Ok(())
}

fn default_log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log.csv");
    PathBuf::from(s)
}

fn train(a: TrainArgs) -> Outcome {
    let header = sigdim::scenario::DatasetReader::open(&a.data)?.header();
    let base = match a.preset {
        Preset::Desk => DlsdeConfig::desk_scale(),
        Preset::Full => DlsdeConfig::full_scale(),
    };
    let mut cfg = usage(base.with_shape(header.n_elements as usize, header.g_classes as usize))?;
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.beta1 {
        cfg.beta1 = v;
    }
    if let Some(v) = a.beta2 {
        cfg.beta2 = v;
    }
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = &a.schedule {
        cfg.schedule = usage(v.parse::<LrSchedule>())?;
    }
    cfg.seed = a.seed;
    cfg.input_mode = usage(a.input_mode.parse::<InputMode>())?;
    usage(cfg.validate())?;

    let log_path = a.log.unwrap_or_else(|| default_log_path(&a.out));
    let quiet = a.quiet;
    let mut report = |e: &dlsde::EpochLog| {
        if !quiet {
            eprintln!(
                "epoch {:>5}  loss {:.5}  train_acc {:.4}  holdout_acc {:.4}",
                e.epoch, e.loss, e.train_acc, e.holdout_acc
            );
        }
    };
    let outcome = dlsde::train(&a.data, &cfg, a.dataset_seed, &mut report)?;
    dlsde::save_checkpoint(&a.out, &outcome.checkpoint)?;
    dlsde::write_training_log(&log_path, &outcome.log)?;
    eprintln!("wrote {} and {}", a.out.display(), log_path.display());
    Ok(())
}

fn sweep_config(s: &SweepArgs, spec: ScenarioSpec, axis: SweepAxis) -> Result<SweepConfig> {
    let estimators = parse_estimators(&s.estimators)?;
    if estimators.contains(&EstimatorKind::Dlsde) && s.model.is_none() {
        return Err(Error::InvalidArgument("--model is required when dlsde is selected".into()));
    }
    let mut cfg = SweepConfig::new(estimators, spec, axis);
    cfg.array = ArrayConfig::half_wavelength(s.n)?;
    cfg.trials_per_point = if s.fast { FAST_TRIALS } else { s.trials };
    cfg.m = s.m;
    cfg.checkpoint = s.model.clone();
    cfg.seed = s.seed;
    cfg.threads = s.threads;
    cfg.validate()?;
    Ok(cfg)
}

fn finish_sweep(s: &SweepArgs, cfg: &SweepConfig, report: &evaluation::EvalReport, title: &str) -> Outcome {
    write_report(&s.out, report)?;
    write_metadata(&metadata_path(&s.out), cfg, report)?;
    if let Some(p) = &s.plot {
        write_svg(p, report, title)?;
    }
    let errors: usize = report.rows.iter().map(|r| r.errors).sum();
    if errors > 0 {
        eprintln!("warning: {errors} estimator calls failed and were counted as misses");
    }
    eprintln!("wrote {}", s.out.display());
    Ok(())
}

fn eval_snr(a: EvalSnrArgs) -> Outcome {
    let snrs = usage(parse_range(&a.snr))?;
    let spec = scenario_spec(&a.scenario, snrs[0]);
    let cfg = usage(sweep_config(&a.sweep, spec, SweepAxis::Snr(snrs)))?;
    let report = evaluation::run_snr_sweep(&cfg, None)?;
    finish_sweep(&a.sweep, &cfg, &report, "Successful detection rate vs SNR")
}

fn eval_resolution(a: EvalResolutionArgs) -> Outcome {
    let seps = usage(parse_range(&a.sep))?;
    let spec = ScenarioSpec {
        doa_lo_deg: base_spec(a.case, a.snr).doa_lo_deg,
        doa_hi_deg: base_spec(a.case, a.snr).doa_hi_deg,
        ..ScenarioSpec::resolution(seps[0], a.snr)
    };
    let cfg = usage(sweep_config(&a.sweep, spec, SweepAxis::Separation(seps)))?;
    let report = evaluation::run_resolution_sweep(&cfg, None)?;
    finish_sweep(&a.sweep, &cfg, &report, &format!("Successful detection rate vs separation, SNR {} dB", a.snr))
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(",")
}

fn infer(a: InferArgs) -> Outcome {
    let checkpoint = a.model.as_deref().map(dlsde::load_checkpoint).transpose()?;
    let n = checkpoint.as_ref().map_or(a.n, |c| c.config().n_elements);
    usage(SmoothingConfig::new(a.m, n, 0))?;
    let r = read_snapshot(&a.snapshot, Some(n))?;
    let ic = estimate_all(&r, &IcConfig::new(IcVariant::Aic, a.m))?;
    for (variant, est) in IcVariant::ALL.iter().zip(&ic) {
        println!("{} k_hat={} scores={}", variant.name().to_uppercase(), est.k_hat, fmt_list(&est.table.scores));
    }
    if let Some(c) = &checkpoint {
        let out = c.infer(&r)?;
        println!("DLSDE k_hat={} logits={}", out.k_hat, fmt_list(&out.logits));
    }
    Ok(())
}

fn plot(a: PlotArgs) -> Outcome {
    let report = read_report(&a.report)?;
    Ok(write_svg(&a.out, &report, &a.title)?)
}
