//! Uniform-linear-array response and single-snapshot observations.
//!
//! A snapshot is the superposition of `K` far-field plane waves plus
//! circularly-symmetric complex white Gaussian noise:
//!
//! ```text
//! r = Σ_k a_k · b(x_k) + ε,    b_i(x) = exp(j·2π·(d/λ)·(i−1)·sin x)
//! ```
//!
//! The carrier frequency, element spacing and propagation speed only enter
//! through `d/λ = d·f_c/c`, so [`ArrayConfig`] stores that ratio directly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrayConfig {
    pub n_elements: usize,
    /// Element spacing over carrier wavelength.
    pub d_over_lambda: f64,
}

impl ArrayConfig {
    pub fn new(n_elements: usize, d_over_lambda: f64) -> Result<Self> {
        let cfg = Self { n_elements, d_over_lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return Err(invalid(format!("array needs at least 2 elements, got {}", self.n_elements)));
        }
        if !(self.d_over_lambda > 0.0 && self.d_over_lambda.is_finite()) {
            return Err(invalid(format!("d/λ must be positive, got {}", self.d_over_lambda)));
        }
        Ok(())
    }
}

/// One single-snapshot observation across the array.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub samples: Vec<Complex64>,
}

impl Snapshot {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("snapshot contains non-finite samples"));
        }
        Ok(Self { samples })
    }

    pub fn zeros(n: usize) -> Self {
        Self { samples: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { samples: self.samples.iter().map(|z| z * c).collect() }
    }

    pub fn add(&self, other: &Snapshot) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!("snapshot lengths {} and {}", self.len(), other.len())));
        }
        Ok(Self { samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub doa_deg: f64,
    /// Complex amplitude; modulus is the source's voltage gain relative to a 0 dB source.
    pub amplitude: Complex64,
}

impl Source {
    pub fn new(doa_deg: f64, amplitude: Complex64) -> Self {
        Self { doa_deg, amplitude }
    }

    /// Source of the given power (dB relative to unit amplitude) and phase.
    pub fn with_power_db(doa_deg: f64, power_db: f64, phase: f64) -> Self {
        let mag = 10f64.powf(power_db / 20.0);
        Self { doa_deg, amplitude: Complex64::from_polar(mag, phase) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.doa_deg > -90.0 && self.doa_deg < 90.0) {
            return Err(Error::AngleOutOfRange(self.doa_deg));
        }
        if !(self.amplitude.norm() > 0.0) || !self.amplitude.norm().is_finite() {
            return Err(invalid(format!("source amplitude must be nonzero, got {}", self.amplitude)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// SNR of a 0 dB source; `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseConfig {
    /// Per-element noise variance `σ² = 10^(−snr/10)`.
    pub fn variance(&self) -> f64 {
        noise_variance(self.snr_db)
    }
}

pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn steering_vector(cfg: &ArrayConfig, doa_deg: f64) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if !(-90.0..=90.0).contains(&doa_deg) {
        return Err(Error::AngleOutOfRange(doa_deg));
    }
    let step = 2.0 * PI * cfg.d_over_lambda * doa_deg.to_radians().sin();
    Ok((0..cfg.n_elements).map(|i| Complex64::from_polar(1.0, step * i as f64)).collect())
}

fn check_sources(cfg: &ArrayConfig, sources: &[Source]) -> Result<()> {
    cfg.validate()?;
    if sources.len() >= cfg.n_elements {
        return Err(Error::TooManySources { sources: sources.len(), elements: cfg.n_elements });
    }
    sources.iter().try_for_each(Source::validate)
}

/// `Σ a_k b(x_k)` with no noise.
pub fn noiseless_snapshot(cfg: &ArrayConfig, sources: &[Source]) -> Result<Snapshot> {
    check_sources(cfg, sources)?;
    let mut samples = vec![Complex64::new(0.0, 0.0); cfg.n_elements];
    for s in sources {
        let b = steering_vector(cfg, s.doa_deg)?;
        for (acc, g) in samples.iter_mut().zip(b) {
            *acc += s.amplitude * g;
        }
    }
    Ok(Snapshot { samples })
}

/// `n` i.i.d. circular complex Gaussian samples of total variance `10^(−snr/10)`.
pub fn noise_vector<R: Rng + ?Sized>(n: usize, snr_db: f64, rng: &mut R) -> Vec<Complex64> {
    let sigma = (noise_variance(snr_db) / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Noisy snapshot drawing the noise from `rng`.
pub fn synthesize_snapshot_with<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    sources: &[Source],
    snr_db: f64,
    rng: &mut R,
) -> Result<Snapshot> {
    let mut snap = noiseless_snapshot(cfg, sources)?;
    if snr_db == f64::INFINITY {
        return Ok(snap);
    }
    if snr_db.is_nan() {
        return Err(invalid("SNR is NaN"));
    }
    for (s, e) in snap.samples.iter_mut().zip(noise_vector(cfg.n_elements, snr_db, rng)) {
        *s += e;
    }
    Ok(snap)
}

/// Noisy snapshot whose noise comes from the stream seeded by `noise.seed`.
pub fn synthesize_snapshot(cfg: &ArrayConfig, sources: &[Source], noise: &NoiseConfig) -> Result<Snapshot> {
    let mut rng = stream(noise.seed, Domain::Snapshot, 0, 0);
    synthesize_snapshot_with(cfg, sources, noise.snr_db, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_vec_eq(a: &[Complex64], b: &[Complex64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-12);
        }
    }

    fn ula4() -> ArrayConfig {
        ArrayConfig::half_wavelength(4).unwrap()
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        assert_vec_eq(&steering_vector(&ula4(), 0.0).unwrap(), &[c(1., 0.); 4]);
    }

    #[test]
    fn steering_at_endfire_alternates() {
        let v = steering_vector(&ula4(), 90.0).unwrap();
        assert_vec_eq(&v, &[c(1., 0.), c(-1., 0.), c(1., 0.), c(-1., 0.)]);
    }

    #[test]
    fn steering_at_30_degrees_steps_quarter_turn() {
        let v = steering_vector(&ula4(), 30.0).unwrap();
        assert_vec_eq(&v, &[c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)]);
    }

    #[test]
    fn steering_rejects_out_of_range_angle() {
        assert!(matches!(steering_vector(&ula4(), 90.5), Err(Error::AngleOutOfRange(_))));
        assert!(matches!(steering_vector(&ula4(), -91.0), Err(Error::AngleOutOfRange(_))));
    }

    #[test]
    fn steering_is_unit_modulus_and_odd() {
        let cfg = ArrayConfig::half_wavelength(32).unwrap();
        for x in [-80.0, -12.5, 0.3, 7.0, 45.0] {
            let v = steering_vector(&cfg, x).unwrap();
            let w = steering_vector(&cfg, -x).unwrap();
            for (a, b) in v.iter().zip(&w) {
                assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
                assert_abs_diff_eq!(a.im, -b.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_examples() {
        let cfg = ula4();
        assert_vec_eq(&noiseless_snapshot(&cfg, &[]).unwrap().samples, &[c(0., 0.); 4]);
        let one = noiseless_snapshot(&cfg, &[Source::new(0.0, c(1., 0.))]).unwrap();
        assert_vec_eq(&one.samples, &[c(1., 0.); 4]);
        let two = noiseless_snapshot(&cfg, &[Source::new(0.0, c(1., 0.)), Source::new(89.999999999, c(1., 0.))]).unwrap();
        assert_vec_eq(&two.samples, &[c(2., 0.), c(0., 0.), c(2., 0.), c(0., 0.)]);
        let scaled = noiseless_snapshot(&cfg, &[Source::new(30.0, c(0., 2.))]).unwrap();
        let want: Vec<_> = [c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)].iter().map(|z| z * c(0., 2.)).collect();
        assert_vec_eq(&scaled.samples, &want);
    }

    #[test]
    fn noiseless_is_linear() {
        let cfg = ArrayConfig::half_wavelength(16).unwrap();
        let s = [Source::new(-3.0, c(0.5, 0.2)), Source::new(4.0, c(-1.0, 1.0)), Source::new(9.5, c(0.0, 2.0))];
        let all = noiseless_snapshot(&cfg, &s).unwrap();
        let mut sum = Snapshot::zeros(16);
        for src in &s {
            sum = sum.add(&noiseless_snapshot(&cfg, std::slice::from_ref(src)).unwrap()).unwrap();
        }
        assert_vec_eq(&all.samples, &sum.samples);
    }

    #[test]
    fn infinite_snr_is_noiseless() {
        let cfg = ula4();
        let s = [Source::new(0.0, c(1., 0.))];
        let snap = synthesize_snapshot(&cfg, &s, &NoiseConfig { snr_db: f64::INFINITY, seed: 3 }).unwrap();
        assert_eq!(snap, noiseless_snapshot(&cfg, &s).unwrap());
    }

    #[test]
    fn too_many_sources_rejected() {
        let cfg = ula4();
        let s: Vec<_> = (0..4).map(|i| Source::new(i as f64 * 10.0, c(1., 0.))).collect();
        assert!(matches!(
            synthesize_snapshot(&cfg, &s, &NoiseConfig { snr_db: 10.0, seed: 0 }),
            Err(Error::TooManySources { sources: 4, elements: 4 })
        ));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = ArrayConfig::half_wavelength(32).unwrap();
        let s = [Source::new(1.0, c(1., 0.)), Source::new(-2.0, c(0., 1.))];
        let n = NoiseConfig { snr_db: 5.0, seed: 99 };
        let a = synthesize_snapshot(&cfg, &s, &n).unwrap();
        let b = synthesize_snapshot(&cfg, &s, &n).unwrap();
        let bits = |s: &Snapshot| s.samples.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn superposition_with_shared_noise_seed() {
        let cfg = ArrayConfig::half_wavelength(8).unwrap();
        let s1 = Source::new(2.0, c(1.0, 0.5));
        let s2 = Source::new(-20.0, c(0.3, -0.7));
        let noise = NoiseConfig { snr_db: 3.0, seed: 1234 };
        let joint = synthesize_snapshot(&cfg, &[s1, s2], &noise).unwrap();
        let eps = noise_vector(8, 3.0, &mut stream(1234, Domain::Snapshot, 0, 0));
        let sum = noiseless_snapshot(&cfg, &[s1])
            .unwrap()
            .add(&noiseless_snapshot(&cfg, &[s2]).unwrap())
            .unwrap()
            .add(&Snapshot::new(eps).unwrap())
            .unwrap();
        assert_vec_eq(&joint.samples, &sum.samples);
    }

    #[test]
    fn noise_power_matches_snr() {
        for snr in [-5.0, 0.0, 12.0] {
            let mut rng = stream(5, Domain::Auxiliary, f64::to_bits(snr), 0);
            let trials = 100_000;
            let mut acc = 0.0;
            for _ in 0..trials {
                acc += noise_vector(1, snr, &mut rng)[0].norm_sqr();
            }
            let mean = acc / trials as f64;
            let want = noise_variance(snr);
            assert!((mean / want - 1.0).abs() < 0.02, "snr {snr}: {mean} vs {want}");
        }
    }
}
