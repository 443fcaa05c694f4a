use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::linalg::outer_product;
use crate::nn::Tensor;
use crate::signal_model::Snapshot;

/// How the snapshot is scaled before forming `r·r^H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputMode {
    /// Divide by the RMS sample magnitude, making the image scale invariant.
    #[default]
    Normalized,
    /// Use the snapshot as received.
    Raw,
}

impl InputMode {
    pub fn code(self) -> u8 {
        match self {
            InputMode::Normalized => 0,
            InputMode::Raw => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(InputMode::Normalized),
            1 => Ok(InputMode::Raw),
            other => Err(Error::Format(format!("unknown input mode {other}"))),
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputMode::Normalized => "normalized",
            InputMode::Raw => "raw",
        })
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(InputMode::Normalized),
            "raw" => Ok(InputMode::Raw),
            other => Err(invalid(format!("unknown input mode '{other}' (normalized|raw)"))),
        }
    }
}

/// Two-channel `[2, N, N]` image of `R = r·r^H`: channel 0 holds `Re R`,
/// channel 1 holds `Im R`.
pub fn build_input(r: &Snapshot, mode: InputMode) -> Result<Tensor> {
    let n = r.len();
    let energy = r.energy();
    if energy == 0.0 {
        return Err(Error::ZeroSnapshot);
    }
    let scaled;
    let r = match mode {
        InputMode::Normalized => {
            let inv_rms = 1.0 / (energy / n as f64).sqrt();
            scaled = Snapshot { samples: r.samples.iter().map(|z| z * inv_rms).collect() };
            &scaled
        }
        InputMode::Raw => r,
    };
    let outer = outer_product(r);
    let mut data = Vec::with_capacity(2 * n * n);
    data.extend(outer.as_slice().iter().map(|z| z.re));
    data.extend(outer.as_slice().iter().map(|z| z.im));
    Tensor::from_vec(&[2, n, n], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn all_ones_snapshot() {
        let r = Snapshot::new(vec![c(1., 0.); 2]).unwrap();
        let t = build_input(&r, InputMode::Normalized).unwrap();
        assert_eq!(t.shape(), &[2, 2, 2]);
        assert_eq!(&t.data()[..4], &[1.0; 4]);
        assert_eq!(&t.data()[4..], &[0.0; 4]);
    }

    #[test]
    fn positive_scaling_is_invisible() {
        let r = Snapshot::new(vec![c(0.3, -1.1), c(2.0, 0.25), c(-0.7, 0.9), c(0.01, 0.4)]).unwrap();
        let a = build_input(&r, InputMode::Normalized).unwrap();
        let b = build_input(&r.scaled(c(4.0, 0.0)), InputMode::Normalized).unwrap();
        assert_eq!(a, b);
        let raw = build_input(&r.scaled(c(4.0, 0.0)), InputMode::Raw).unwrap();
        assert_ne!(a, raw);
    }

    #[test]
    fn complex_scaling_preserves_magnitudes() {
        let r = Snapshot::new(vec![c(0.3, -1.1), c(2.0, 0.25), c(-0.7, 0.9)]).unwrap();
        let a = build_input(&r, InputMode::Normalized).unwrap();
        let b = build_input(&r.scaled(c(0.0, 5.0)), InputMode::Normalized).unwrap();
        let mag = |t: &Tensor, i: usize| t.data()[i].hypot(t.data()[9 + i]);
        for i in 0..9 {
            assert!((mag(&a, i) - mag(&b, i)).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_structure() {
        let r = Snapshot::new((0..6).map(|i| c((i as f64).sin(), (2.0 * i as f64).cos())).collect()).unwrap();
        let t = build_input(&r, InputMode::Normalized).unwrap();
        let (re, im) = t.data().split_at(36);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(re[i * 6 + j], re[j * 6 + i]);
                assert_eq!(im[i * 6 + j], -im[j * 6 + i]);
            }
        }
    }

    #[test]
    fn zero_snapshot_rejected() {
        assert!(matches!(build_input(&Snapshot::zeros(4), InputMode::Normalized), Err(Error::ZeroSnapshot)));
    }
}
