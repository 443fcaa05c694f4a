//! The `SDMO` checkpoint format.
//!
//! ```text
//! b"SDMO" | version u16
//! config  : N u32 | G u32 | input_mode u8 | schedule u8 | lr f64 | beta1 f64 | beta2 f64 | eps f64
//!           | batch_size u32 | epochs u32 | seed u64
//! layers  : count u32, then per layer a tag u8 (0 conv, 1 dense, 2 relu, 3 flatten) followed by
//!           conv: in u32 out u32 kh u32 kw u32 stride u32 pad u32 / dense: in u32 out u32
//! shapes  : count u32, then per tensor rank u8 and rank × u32
//! weights : every parameter tensor in order, f32
//! meta    : has_dataset_seed u8 | dataset_seed u64 | final_loss f64 | epochs_completed u32
//! ```
//!
//! Everything is little-endian.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic_write_bytes;
use crate::nn::{Conv2dSpec, DenseSpec, LayerSpec, Model, Tensor};
use crate::signal_model::Snapshot;

use super::{build_input, k_from_logits, DlsdeConfig, Inference, InputMode, LrSchedule};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SDMO";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMeta {
    pub dataset_seed: Option<u64>,
    pub final_loss: f64,
    pub epochs_completed: u32,
}

/// A trained (or freshly initialised) network with its configuration.
///
/// Parameters always hold values representable in `f32`, so a loaded
/// checkpoint infers exactly like the one that was saved.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    config: DlsdeConfig,
    model: Model,
    pub meta: TrainingMeta,
}

fn round_to_f32(t: &Tensor) -> Tensor {
    t.map(|v| v as f32 as f64)
}

impl Checkpoint {
    pub fn new(config: DlsdeConfig, model: &Model, meta: TrainingMeta) -> Result<Self> {
        config.validate()?;
        let params = model.params().iter().map(round_to_f32).collect();
        let model = Model::from_params(config.architecture.clone(), &config.input_shape(), params)?;
        Ok(Self { config, model, meta })
    }

    pub fn config(&self) -> &DlsdeConfig {
        &self.config
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn infer(&self, r: &Snapshot) -> Result<Inference> {
        if r.len() != self.config.n_elements {
            return Err(Error::Shape(format!(
                "snapshot has {} samples, model expects N = {}",
                r.len(),
                self.config.n_elements
            )));
        }
        let input = build_input(r, self.config.input_mode)?;
        let logits = self.model.forward(&input)?.into_data();
        Ok(Inference { k_hat: k_from_logits(&logits), logits })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        let w = &mut out;
        w.extend_from_slice(&CHECKPOINT_MAGIC);
        put_u16(w, CHECKPOINT_VERSION);
        put_u32(w, c.n_elements);
        put_u32(w, c.g_classes);
        w.push(c.input_mode.code());
        w.push(c.schedule.code());
        for v in [c.lr, c.beta1, c.beta2, c.eps] {
            w.extend_from_slice(&v.to_le_bytes());
        }
        put_u32(w, c.batch_size);
        put_u32(w, c.epochs);
        w.extend_from_slice(&c.seed.to_le_bytes());

        put_u32(w, c.architecture.len());
        for layer in &c.architecture {
            match layer {
                LayerSpec::Conv2d(s) => {
                    w.push(0);
                    for v in [s.in_channels, s.out_channels, s.kernel.0, s.kernel.1, s.stride, s.padding] {
                        put_u32(w, v);
                    }
                }
                LayerSpec::Dense(d) => {
                    w.push(1);
                    put_u32(w, d.in_features);
                    put_u32(w, d.out_features);
                }
                LayerSpec::Relu => w.push(2),
                LayerSpec::Flatten => w.push(3),
            }
        }

        let params = self.model.params();
        put_u32(w, params.len());
        for p in params {
            w.push(p.shape().len() as u8);
            for &d in p.shape() {
                put_u32(w, d);
            }
        }
        for p in params {
            for &v in p.data() {
                w.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }

        let m = &self.meta;
        w.push(m.dataset_seed.is_some() as u8);
        w.extend_from_slice(&m.dataset_seed.unwrap_or(0).to_le_bytes());
        w.extend_from_slice(&m.final_loss.to_le_bytes());
        w.extend_from_slice(&m.epochs_completed.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { buf: bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not an SDMO checkpoint (bad magic)".into()));
        }
        let version = r.u16()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let n_elements = r.u32()?;
        let g_classes = r.u32()?;
        let input_mode = InputMode::from_code(r.u8()?)?;
        let schedule = LrSchedule::from_code(r.u8()?)?;
        let (lr, beta1, beta2, eps) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let batch_size = r.u32()?;
        let epochs = r.u32()?;
        let seed = r.u64()?;

        let n_layers = r.u32()?;
        let mut architecture = Vec::with_capacity(n_layers.min(1024));
        for _ in 0..n_layers {
            architecture.push(match r.u8()? {
                0 => {
                    let v: Vec<usize> = (0..6).map(|_| r.u32()).collect::<Result<_>>()?;
                    LayerSpec::Conv2d(Conv2dSpec {
                        in_channels: v[0],
                        out_channels: v[1],
                        kernel: (v[2], v[3]),
                        stride: v[4],
                        padding: v[5],
                    })
                }
                1 => LayerSpec::Dense(DenseSpec { in_features: r.u32()?, out_features: r.u32()? }),
                2 => LayerSpec::Relu,
                3 => LayerSpec::Flatten,
                tag => return Err(Error::Format(format!("unknown layer tag {tag}"))),
            });
        }
        let config = DlsdeConfig {
            n_elements,
            g_classes,
            architecture,
            lr,
            beta1,
            beta2,
            eps,
            batch_size,
            epochs,
            seed,
            input_mode,
            schedule,
        };
        config.validate()?;
        let expected = Model::param_shapes(&config.architecture, &config.input_shape())?;

        let n_tensors = r.u32()?;
        if n_tensors != expected.len() {
            return Err(Error::Shape(format!("shape table lists {n_tensors} tensors, architecture has {}", expected.len())));
        }
        let mut shapes = Vec::with_capacity(n_tensors);
        for want in &expected {
            let rank = r.u8()? as usize;
            let shape: Vec<usize> = (0..rank).map(|_| r.u32()).collect::<Result<_>>()?;
            if &shape != want {
                return Err(Error::Shape(format!("shape table entry {shape:?} does not match the architecture's {want:?}")));
            }
            shapes.push(shape);
        }
        let mut params = Vec::with_capacity(shapes.len());
        for shape in &shapes {
            let len: usize = shape.iter().product();
            let raw = r.take(4 * len)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
            params.push(Tensor::from_vec(shape, data)?);
        }
        let has_seed = r.u8()?;
        let seed_value = r.u64()?;
        let meta = TrainingMeta {
            dataset_seed: match has_seed {
                0 => None,
                1 => Some(seed_value),
                other => return Err(Error::Format(format!("bad dataset-seed flag {other}"))),
            },
            final_loss: r.f64()?,
            epochs_completed: r.u32()? as u32,
        };
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} unexpected trailing bytes", bytes.len() - r.pos)));
        }
        let model = Model::from_params(config.architecture.clone(), &config.input_shape(), params)?;
        Ok(Self { config, model, meta })
    }
}

fn put_u16(w: &mut Vec<u8>, v: u16) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(w: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("checkpoint field exceeds u32");
    w.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!("checkpoint truncated at byte {}", self.pos))),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    atomic_write_bytes(path, &checkpoint.to_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

impl Checkpoint {
    /// Writes the checkpoint to any sink.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        Ok(w.write_all(&self.to_bytes())?)
    }
}
