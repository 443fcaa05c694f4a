//! The `SDIM` labelled-dataset format.
//!
//! ```text
//! header  : b"SDIM" | version u16 | n_elements u16 | g_classes u16 | record_count u64
//! record  : label u16 | 2·N·N × f32   (real plane row-major, then imaginary plane)
//! ```
//!
//! All integers and floats are little-endian. The image is the network input
//! produced by [`crate::dlsde::build_input`], stored at single precision.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::dlsde::{build_input, InputMode};
use crate::error::{invalid, Error, Result};
use crate::io::atomic_write;
use crate::rng::{stream, Domain};
use crate::signal_model::ArrayConfig;

use super::{build_label, sample_scenario, ScenarioSpec};

pub const DATASET_MAGIC: [u8; 4] = *b"SDIM";
pub const DATASET_VERSION: u16 = 1;
pub const DATASET_HEADER_LEN: u64 = 4 + 2 + 2 + 2 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub n_elements: u16,
    pub g_classes: u16,
    pub record_count: u64,
}

impl DatasetHeader {
    pub fn record_len(&self) -> u64 {
        2 + 8 * (self.n_elements as u64).pow(2)
    }

    fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&self.n_elements.to_le_bytes())?;
        w.write_all(&self.g_classes.to_le_bytes())?;
        w.write_all(&self.record_count.to_le_bytes())
    }

    fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut buf = [0u8; DATASET_HEADER_LEN as usize];
        r.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Format("file shorter than the SDIM header".into()),
            _ => Error::Io(e),
        })?;
        if buf[..4] != DATASET_MAGIC {
            return Err(Error::Format(format!("bad magic {:?}, expected \"SDIM\"", &buf[..4])));
        }
        let u16_at = |i: usize| u16::from_le_bytes([buf[i], buf[i + 1]]);
        let version = u16_at(4);
        if version != DATASET_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        let header = Self {
            n_elements: u16_at(6),
            g_classes: u16_at(8),
            record_count: u64::from_le_bytes(buf[10..18].try_into().expect("8 bytes")),
        };
        if header.n_elements < 2 || header.g_classes < 1 {
            return Err(Error::Format(format!("degenerate header {header:?}")));
        }
        Ok(header)
    }
}

/// Expected file size in bytes.
pub fn dataset_file_size(n_elements: u16, record_count: u64) -> u64 {
    let h = DatasetHeader { n_elements, g_classes: 1, record_count };
    DATASET_HEADER_LEN + record_count * h.record_len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    /// 0-based class index.
    pub label: u16,
    /// `2·N·N` values: real plane then imaginary plane, each row-major.
    pub image: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct DatasetWriteOptions {
    pub spec: ScenarioSpec,
    pub array: ArrayConfig,
    pub g_classes: usize,
    pub count: u64,
    pub seed: u64,
    pub input_mode: InputMode,
    /// Also write the raw snapshots as text (`label,re0,im0,re1,im1,…` per line).
    pub raw_dump: Option<PathBuf>,
}

/// Generates `count` records. Record `i` draws its scenario and noise from the
/// stream `(seed, Dataset, i)`, so files are reproducible and independent of
/// any evaluation run.
pub fn write_dataset(path: &Path, opts: &DatasetWriteOptions) -> Result<DatasetHeader> {
    opts.array.validate()?;
    opts.spec.validate(opts.g_classes)?;
    if opts.count == 0 {
        return Err(invalid("dataset needs at least one record"));
    }
    let n = u16::try_from(opts.array.n_elements).map_err(|_| invalid("array too large for the SDIM format"))?;
    let g = u16::try_from(opts.g_classes).map_err(|_| invalid("too many classes for the SDIM format"))?;
    let header = DatasetHeader { n_elements: n, g_classes: g, record_count: opts.count };

    let mut raw = match &opts.raw_dump {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    atomic_write(path, |w| {
        header.write_to(w)?;
        for i in 0..opts.count {
            let mut rng = stream(opts.seed, Domain::Dataset, i, 0);
            let scenario = sample_scenario(&opts.spec, &mut rng)?;
            let label = build_label(&scenario, opts.g_classes)? as u16;
            let snapshot = scenario.snapshot(&opts.array, &mut rng)?;
            let image = build_input(&snapshot, opts.input_mode)?;
            w.write_all(&label.to_le_bytes())?;
            for &v in image.data() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
            if let Some(raw) = raw.as_mut() {
                write!(raw, "{label}")?;
                for z in &snapshot.samples {
                    write!(raw, ",{:e},{:e}", z.re, z.im)?;
                }
                writeln!(raw)?;
            }
        }
        Ok(())
    })?;
    if let Some(mut raw) = raw {
        raw.flush()?;
    }
    Ok(header)
}

/// Streaming reader over an `SDIM` file.
pub struct DatasetReader<R> {
    inner: R,
    header: DatasetHeader,
    next: u64,
    failed: bool,
}

impl DatasetReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> DatasetReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let header = DatasetHeader::read_from(&mut inner)?;
        Ok(Self { inner, header, next: 0, failed: false })
    }

    pub fn header(&self) -> DatasetHeader {
        self.header
    }

    fn read_record(&mut self) -> Result<DatasetRecord> {
        let len = self.header.record_len() as usize;
        let mut buf = vec![0u8; len];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Format(format!(
                "truncated dataset: record {} of {} is incomplete",
                self.next, self.header.record_count
            )),
            _ => Error::Io(e),
        })?;
        let label = u16::from_le_bytes([buf[0], buf[1]]);
        if label >= self.header.g_classes {
            return Err(Error::Format(format!("record {} has label {label} ≥ {}", self.next, self.header.g_classes)));
        }
        let image = buf[2..].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(DatasetRecord { label, image })
    }

    fn check_trailing(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Format(format!(
                "dataset has data beyond the {} records its header declares",
                self.header.record_count
            ))),
        }
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.next == self.header.record_count {
            self.failed = true;
            return self.check_trailing().err().map(Err);
        }
        let rec = self.read_record();
        self.next += 1;
        if rec.is_err() {
            self.failed = true;
        }
        Some(rec)
    }
}

/// Reads a whole dataset into memory.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let reader = DatasetReader::open(path)?;
    let header = reader.header();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_file_size() {
        assert_eq!(dataset_file_size(32, 200_000), 18 + 200_000 * (2 + 2 * 32 * 32 * 4));
    }

    #[test]
    fn header_roundtrip_and_rejections() {
        let h = DatasetHeader { n_elements: 8, g_classes: 4, record_count: 0 };
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        assert_eq!(buf.len() as u64, DATASET_HEADER_LEN);
        let r = DatasetReader::new(buf.as_slice()).unwrap();
        assert_eq!(r.header(), h);
        assert_eq!(r.count(), 0);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(DatasetReader::new(bad.as_slice()), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(DatasetReader::new(bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(DatasetReader::new(&buf[..10]), Err(Error::Format(_))));
    }
}
