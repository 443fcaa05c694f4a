use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::io::atomic_write;
use crate::nn::{adam_step, argmax, AdamState, Model, Tensor};
use crate::rng::{stream, Domain};
use crate::scenario::{read_dataset, DatasetHeader, DatasetRecord};

use super::{Checkpoint, DlsdeConfig, TrainingMeta};

pub const TRAINING_LOG_HEADER: &str = "epoch,loss,train_acc,holdout_acc";

const EVAL_BATCH: usize = 256;

/// One line of the training log. `train_acc` is measured on the fly, before
/// each batch's update; `holdout_acc` is NaN when the dataset is too small to
/// hold anything out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub holdout_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Number of trailing records reserved for held-out accuracy (5%).
pub fn holdout_len(count: usize) -> usize {
    count / 20
}

/// Trains on an `SDIM` file. The header must agree with `cfg` on N and G.
pub fn train(
    dataset: &Path,
    cfg: &DlsdeConfig,
    dataset_seed: Option<u64>,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    let (header, records) = read_dataset(dataset)?;
    train_records(&header, &records, cfg, dataset_seed, on_epoch)
}

fn gather(records: &[DatasetRecord], idx: &[usize], shape: &[usize]) -> Result<(Tensor, Vec<usize>)> {
    let per: usize = shape.iter().product();
    let mut data = Vec::with_capacity(idx.len() * per);
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        data.extend(records[i].image.iter().map(|&v| v as f64));
        labels.push(records[i].label as usize);
    }
    let mut full = vec![idx.len()];
    full.extend_from_slice(shape);
    Ok((Tensor::from_vec(&full, data)?, labels))
}

fn accuracy(model: &Model, records: &[DatasetRecord], shape: &[usize], g: usize) -> Result<f64> {
    if records.is_empty() {
        return Ok(f64::NAN);
    }
    let idx: Vec<usize> = (0..records.len()).collect();
    let mut correct = 0;
    for chunk in idx.chunks(EVAL_BATCH) {
        let (batch, labels) = gather(records, chunk, shape)?;
        let out = model.forward(&batch)?;
        correct += out.data().chunks(g).zip(&labels).filter(|(row, &l)| argmax(row) == l).count();
    }
    Ok(correct as f64 / records.len() as f64)
}

/// Trains on in-memory records. Identical inputs and seed give an identical
/// checkpoint.
pub fn train_records(
    header: &DatasetHeader,
    records: &[DatasetRecord],
    cfg: &DlsdeConfig,
    dataset_seed: Option<u64>,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if header.n_elements as usize != cfg.n_elements || header.g_classes as usize != cfg.g_classes {
        return Err(invalid(format!(
            "dataset has N = {}, G = {} but the model is configured for N = {}, G = {}",
            header.n_elements, header.g_classes, cfg.n_elements, cfg.g_classes
        )));
    }
    let shape = cfg.input_shape();
    let per: usize = shape.iter().product();
    if let Some(bad) = records.iter().position(|r| r.image.len() != per || r.label as usize >= cfg.g_classes) {
        return Err(Error::Shape(format!("record {bad} does not fit the model")));
    }
    let n_hold = holdout_len(records.len());
    let (train_set, holdout) = records.split_at(records.len() - n_hold);
    if train_set.is_empty() {
        return Err(invalid("dataset leaves no training records"));
    }

    let mut model = Model::new(cfg.architecture.clone(), &shape, &mut stream(cfg.seed, Domain::Training, u64::MAX, 0))?;
    let mut adam = AdamState::new(model.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    let steps_per_epoch = train_set.len().div_ceil(cfg.batch_size) as u64;
    let total_steps = steps_per_epoch * cfg.epochs as u64;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut final_loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream(cfg.seed, Domain::Training, epoch as u64, 0));
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (step, idx) in order.chunks(cfg.batch_size).enumerate() {
            let (batch, labels) = gather(train_set, idx, &shape)?;
            let (loss, grads, hits) = model.loss_and_grads(&batch, &labels)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            adam.lr = cfg.schedule.rate(cfg.lr, adam.step, total_steps);
            adam_step(model.params_mut(), &grads, &mut adam)?;
            loss_sum += loss * idx.len() as f64;
            correct += hits;
        }
        final_loss = loss_sum / train_set.len() as f64;
        let entry = EpochLog {
            epoch: epoch + 1,
            loss: final_loss,
            train_acc: correct as f64 / train_set.len() as f64,
            holdout_acc: accuracy(&model, holdout, &shape, cfg.g_classes)?,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    let meta = TrainingMeta { dataset_seed, final_loss, epochs_completed: cfg.epochs as u32 };
    Ok(TrainOutcome { checkpoint: Checkpoint::new(cfg.clone(), &model, meta)?, log })
}

pub fn write_training_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "{TRAINING_LOG_HEADER}")?;
        for e in log {
            writeln!(w, "{},{},{},{}", e.epoch, e.loss, e.train_acc, e.holdout_acc)?;
        }
        Ok(())
    })
}

pub fn read_training_log(path: &Path) -> Result<Vec<EpochLog>> {
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    match lines.next() {
        Some(Ok(h)) if h == TRAINING_LOG_HEADER => {}
        _ => return Err(Error::Parse(format!("training log must start with '{TRAINING_LOG_HEADER}'"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("training log line {}: '{line}'", i + 2));
        if f.len() != 4 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        out.push(EpochLog {
            epoch: f[0].parse().map_err(|_| bad())?,
            loss: num(f[1])?,
            train_acc: num(f[2])?,
            holdout_acc: num(f[3])?,
        });
    }
    Ok(out)
}
