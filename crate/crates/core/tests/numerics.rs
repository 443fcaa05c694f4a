mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use sigdim::ic::{estimate, estimate_all, score_spectrum, sphericity_term, IcConfig, IcVariant};
use sigdim::linalg::{eigvals_hermitian, smoothed_covariance, ComplexMatrix, EigenSpectrum};
use sigdim::rng::{stream, Domain};
use sigdim::signal_model::{noise_vector, noiseless_snapshot, ArrayConfig, Snapshot, Source};

use common::{oracle_det, oracle_eigvals, random_hermitian};

#[test]
fn jacobi_matches_characteristic_polynomial() {
    let mut rng = stream(101, Domain::Auxiliary, 0, 0);
    for case in 0..200 {
        let n = 2 + case % 3;
        let a = random_hermitian(n, &mut rng);
        let got = eigvals_hermitian(&a).unwrap();
        let want = oracle_eigvals(&a);
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8, "case {case}: {:?} vs {want:?}", got.values);
        }
        let tr = a.trace().re;
        assert!((got.sum() - tr).abs() <= 1e-10 * tr.abs().max(1.0));
        let det = oracle_det(&a);
        assert!((got.product() - det).abs() <= 1e-10 * det.abs().max(1e-3), "case {case}: det {det}");
    }
}

#[test]
fn jacobi_on_known_spectra() {
    let a = ComplexMatrix::from_real_diagonal(&[3.0, -1.0, 2.0]);
    assert_eq!(eigvals_hermitian(&a).unwrap().values, vec![3.0, 2.0, -1.0]);
    // [[2, i], [−i, 2]] has eigenvalues 3 and 1.
    let b = ComplexMatrix::from_vec(
        2,
        2,
        vec![Complex64::new(2., 0.), Complex64::new(0., 1.), Complex64::new(0., -1.), Complex64::new(2., 0.)],
    )
    .unwrap();
    let v = eigvals_hermitian(&b).unwrap().values;
    assert!((v[0] - 3.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frobenius_equals_eigenvalue_energy(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = stream(seed, Domain::Auxiliary, 1, 0);
        let a = random_hermitian(n, &mut rng);
        let ev = eigvals_hermitian(&a).unwrap();
        let energy: f64 = ev.values.iter().map(|v| v * v).sum();
        prop_assert!((energy.sqrt() - a.frobenius_norm()).abs() < 1e-10 * a.frobenius_norm());
        prop_assert!(ev.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn smoothed_covariance_is_psd(seed in any::<u64>()) {
        let mut rng = stream(seed, Domain::Auxiliary, 2, 0);
        let r = Snapshot::new(noise_vector(32, 0.0, &mut rng)).unwrap();
        let ev = eigvals_hermitian(&smoothed_covariance(&r, 17).unwrap()).unwrap();
        prop_assert_eq!(ev.len(), 16);
        prop_assert!(ev.values.iter().all(|&v| v >= 0.0));
    }
}

fn random_sources<R: Rng>(k: usize, min_sep: f64, rng: &mut R) -> Vec<Source> {
    loop {
        let mut d: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
        d.sort_by(f64::total_cmp);
        if d.windows(2).all(|w| w[1] - w[0] >= min_sep) {
            return d
                .into_iter()
                .map(|x| Source::with_power_db(x, rng.gen_range(0.0..10.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
        }
    }
}

#[test]
fn noiseless_rank_property() {
    let array = ArrayConfig::half_wavelength(32).unwrap();
    let mut rng = stream(202, Domain::Auxiliary, 0, 0);
    for trial in 0..500 {
        let k = 1 + trial % 4;
        let sources = random_sources(k, 3.0, &mut rng);
        let r = noiseless_snapshot(&array, &sources).unwrap();
        let ev = eigvals_hermitian(&smoothed_covariance(&r, 17).unwrap()).unwrap().values;
        assert!(ev[k - 1] / ev[k] > 1e6, "trial {trial}: {:?}", &ev[..=k]);
        assert!(ev[k] / ev[0] < 1e-10, "trial {trial}: {:?}", &ev[..=k]);
    }
}

fn score_oracle(lambdas: &[f64], m: usize, variant: IcVariant) -> Vec<f64> {
    let n = lambdas.len();
    let floor = 1e-12 * lambdas[0];
    let l: Vec<f64> = lambdas.iter().map(|&v| v.max(floor)).collect();
    (0..n)
        .map(|k| {
            let tail = &l[k..];
            let am = tail.iter().sum::<f64>() / tail.len() as f64;
            let log_gm = tail.iter().map(|v| v.ln()).sum::<f64>() / tail.len() as f64;
            let data = m as f64 * (n - k) as f64 * (am.ln() - log_gm);
            let (kf, nf, mf) = (k as f64, n as f64, m as f64);
            data + match variant {
                IcVariant::Aic => kf * (2.0 * nf - kf),
                IcVariant::Mdl => 0.5 * (kf * (2.0 * nf - kf) + 1.0) * mf.ln(),
                IcVariant::Gic => mf.sqrt() * (2.0 * nf - kf) * kf,
            }
        })
        .collect()
}

#[test]
fn scores_match_oracle() {
    let mut rng = stream(303, Domain::Auxiliary, 0, 0);
    for _ in 0..50 {
        let mut values: Vec<f64> = (0..16).map(|_| rng.gen_range(1e-3..10.0f64).powi(2)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let spectrum = EigenSpectrum { values: values.clone() };
        for variant in IcVariant::ALL {
            let table = score_spectrum(&spectrum, &IcConfig::new(variant, 17)).unwrap();
            let want = score_oracle(&values, 17, variant);
            for (g, w) in table.scores.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{variant}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn sphericity_examples() {
    let s = EigenSpectrum { values: vec![4.0, 1.0] };
    assert!((sphericity_term(&s, 0, 1e-12).unwrap() - 1.25f64.ln()).abs() < 1e-15);
    assert_eq!(sphericity_term(&s, 1, 1e-12).unwrap(), 0.0);
    let flat = EigenSpectrum { values: vec![2.5; 16] };
    for variant in IcVariant::ALL {
        assert_eq!(score_spectrum(&flat, &IcConfig::new(variant, 17)).unwrap().argmin_k, 0);
    }
}

#[test]
fn noiseless_sources_are_counted_exactly() {
    let array = ArrayConfig::half_wavelength(32).unwrap();
    let one = noiseless_snapshot(&array, &[Source::new(3.0, Complex64::new(2.0, 0.0))]).unwrap();
    assert_eq!(estimate(&one, &IcConfig::new(IcVariant::Aic, 17)).unwrap().k_hat, 1);
    let two = noiseless_snapshot(
        &array,
        &[Source::new(-2.0, Complex64::new(1.0, 0.0)), Source::new(3.0, Complex64::new(0.0, 1.0))],
    )
    .unwrap();
    assert_eq!(estimate(&two, &IcConfig::new(IcVariant::Mdl, 17)).unwrap().k_hat, 2);
}

/// Pure noise at 30 dB. The rate for AIC is recomputed from the same spectra
/// through the independent score oracle; MDL and GIC carry heavier penalties and
/// almost never report a source.
#[test]
fn pure_noise_rates() {
    let mut hits = [0usize; 3];
    let mut oracle_aic = 0;
    for t in 0..1000 {
        let mut rng = stream(404, Domain::Auxiliary, t, 0);
        let r = Snapshot::new(noise_vector(32, 30.0, &mut rng)).unwrap();
        let all = estimate_all(&r, &IcConfig::new(IcVariant::Aic, 17)).unwrap();
        for (h, est) in hits.iter_mut().zip(&all) {
            *h += (est.k_hat == 0) as usize;
        }
        let want = score_oracle(&all[0].spectrum.values, 17, IcVariant::Aic);
        let k0 = (0..want.len()).fold(0, |b, k| if want[k] < want[b] { k } else { b });
        oracle_aic += (k0 == 0) as usize;
    }
    eprintln!("pure-noise k_hat = 0 per 1000: aic {} mdl {} gic {}", hits[0], hits[1], hits[2]);
    assert_eq!(hits[0], oracle_aic);
    assert!(hits[0] > 500, "aic {}", hits[0]);
    assert!(hits[1] >= 950 && hits[2] >= 950, "{hits:?}");
}

#[test]
fn estimate_all_agrees_with_single_variants() {
    let mut rng = stream(505, Domain::Auxiliary, 0, 0);
    let array = ArrayConfig::half_wavelength(32).unwrap();
    for _ in 0..20 {
        let sources = random_sources(3, 0.5, &mut rng);
        let clean = noiseless_snapshot(&array, &sources).unwrap();
        let r = clean.add(&Snapshot::new(noise_vector(32, 10.0, &mut rng)).unwrap()).unwrap();
        let all = estimate_all(&r, &IcConfig::new(IcVariant::Aic, 17)).unwrap();
        for (variant, est) in IcVariant::ALL.iter().zip(&all) {
            let single = estimate(&r, &IcConfig::new(*variant, 17)).unwrap();
            assert_eq!(single.table.scores, est.table.scores);
            assert_eq!(single.k_hat, est.k_hat);
        }
    }
}
