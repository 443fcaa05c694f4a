//! Atomic file output and snapshot files.
//!
//! A snapshot file is either text, one `re,im` pair per line (blank lines and
//! `#` comments ignored), or binary:
//!
//! ```text
//! b"SDSN" | version u16 = 1 | n u32 | n × (re f64, im f64)
//! ```
//!
//! little-endian throughout.

use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::signal_model::Snapshot;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"SDSN";
pub const SNAPSHOT_VERSION: u16 = 1;

/// Writes through a temporary file in the destination directory and renames
/// it into place once `fill` succeeds. On error the destination is untouched.
pub fn atomic_write<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut NamedTempFile>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(&mut tmp);
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// [`atomic_write`] for an in-memory buffer.
pub fn atomic_write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    atomic_write(path, |w| Ok(w.write_all(bytes)?))
}

/// Parses the text form. With `expected` set, the sample count must match and
/// the error names the first offending line.
pub fn parse_snapshot_text(text: &str, expected: Option<usize>) -> Result<Snapshot> {
    let mut samples = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        last_line = lineno;
        if let Some(n) = expected {
            if samples.len() == n {
                return Err(Error::Parse(format!("line {lineno}: extra sample, expected exactly {n}")));
            }
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        let value = match fields.as_slice() {
            [re, im] => re.parse::<f64>().ok().zip(im.parse::<f64>().ok()),
            _ => None,
        };
        match value {
            Some((re, im)) if re.is_finite() && im.is_finite() => samples.push(Complex64::new(re, im)),
            _ => return Err(Error::Parse(format!("line {lineno}: expected 're,im' with finite numbers, got '{line}'"))),
        }
    }
    if let Some(n) = expected {
        if samples.len() != n {
            return Err(Error::Parse(format!(
                "line {}: file ends after {} samples, expected {n}",
                last_line + 1,
                samples.len()
            )));
        }
    }
    if samples.is_empty() {
        return Err(Error::Parse("snapshot file holds no samples".into()));
    }
    Snapshot::new(samples)
}

pub fn snapshot_to_text(r: &Snapshot) -> String {
    r.samples.iter().map(|z| format!("{},{}\n", z.re, z.im)).collect()
}

pub fn snapshot_to_bytes(r: &Snapshot) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 16 * r.len());
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(r.len() as u32).to_le_bytes());
    for z in &r.samples {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn snapshot_from_bytes(bytes: &[u8], expected: Option<usize>) -> Result<Snapshot> {
    if bytes.len() < 10 || bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a binary snapshot file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    if bytes.len() != 10 + 16 * n {
        return Err(Error::Format(format!("binary snapshot declares {n} samples but holds {} bytes of data", bytes.len() - 10)));
    }
    if let Some(want) = expected {
        if n != want {
            return Err(Error::Format(format!("binary snapshot has {n} samples, expected {want}")));
        }
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    Snapshot::new(bytes[10..].chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect())
}

/// Reads either snapshot form, telling them apart by the magic bytes.
pub fn read_snapshot(path: &Path, expected: Option<usize>) -> Result<Snapshot> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(&SNAPSHOT_MAGIC) {
        return snapshot_from_bytes(&bytes, expected);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse("snapshot file is neither text nor SDSN".into()))?;
    parse_snapshot_text(&text, expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_snapshot() {
        let r = parse_snapshot_text("# header\n1,0\n 0.5 , -2\n\n3e-1,4\n", Some(3)).unwrap();
        assert_eq!(r.samples, vec![Complex64::new(1., 0.), Complex64::new(0.5, -2.), Complex64::new(0.3, 4.)]);
        assert_eq!(parse_snapshot_text(&snapshot_to_text(&r), None).unwrap(), r);
    }

    #[test]
    fn text_errors_name_the_line() {
        let e = parse_snapshot_text("1,0\n2,0\n3,0\n", Some(2)).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = parse_snapshot_text("1,0\n", Some(2)).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = parse_snapshot_text("1,0\n1;0\n", None).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn binary_snapshot() {
        let r = Snapshot::new(vec![Complex64::new(0.1, -0.2), Complex64::new(1e-300, 7.0)]).unwrap();
        let bytes = snapshot_to_bytes(&r);
        assert_eq!(snapshot_from_bytes(&bytes, Some(2)).unwrap(), r);
        assert!(snapshot_from_bytes(&bytes, Some(3)).is_err());
        assert!(snapshot_from_bytes(&bytes[..bytes.len() - 1], None).is_err());
    }

    #[test]
    fn failed_write_leaves_target_alone() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.bin");
        atomic_write_bytes(&p, b"first").unwrap();
        let err = atomic_write(&p, |w| {
            w.write_all(b"partial")?;
            Err(crate::error::invalid("boom"))
        });
        assert!(err.is_err());
        assert_eq!(std::fs::read(&p).unwrap(), b"first");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
