//! Dense complex matrices, spatial smoothing and a Hermitian eigenvalue solver.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::signal_model::Snapshot;

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}×{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    pub values: Vec<f64>,
}

impl EigenSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }
}

/// Spatial smoothing window length `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingConfig {
    pub m: usize,
}

impl SmoothingConfig {
    pub const DEFAULT_M: usize = 17;

    /// Checks that both the window count `N−M+1` and the window length `M`
    /// exceed the largest signal dimension the caller wants to detect.
    pub fn new(m: usize, n_elements: usize, k_max: usize) -> Result<Self> {
        if m == 0 || m > n_elements {
            return Err(invalid(format!("smoothing length {m} outside 1..={n_elements}")));
        }
        let n_sub = n_elements - m + 1;
        if k_max >= n_sub || k_max >= m {
            return Err(invalid(format!(
                "smoothing length {m} cannot represent {k_max} sources with {n_elements} elements (needs K < {n_sub} and K < {m})"
            )));
        }
        Ok(Self { m })
    }

    /// Size `N' = N − M + 1` of the smoothed covariance.
    pub fn reduced_size(&self, n_elements: usize) -> usize {
        n_elements + 1 - self.m
    }
}

/// `R = r·r^H`.
pub fn outer_product(r: &Snapshot) -> ComplexMatrix {
    let s = &r.samples;
    ComplexMatrix::from_fn(s.len(), s.len(), |i, j| s[i] * s[j].conj())
}

/// `(N−M+1)×M` Hankel matrix with `Φ[i][j] = r[i+j]` (0-based).
pub fn hankel(r: &Snapshot, m: usize) -> Result<ComplexMatrix> {
    let n = r.len();
    if m == 0 || m > n {
        return Err(invalid(format!("smoothing length {m} outside 1..={n}")));
    }
    Ok(ComplexMatrix::from_fn(n - m + 1, m, |i, j| r.samples[i + j]))
}

/// Spatially smoothed covariance `(1/M)·Φ·Φ^H`.
pub fn smoothed_covariance(r: &Snapshot, m: usize) -> Result<ComplexMatrix> {
    let phi = hankel(r, m)?;
    let rows = phi.rows();
    let inv_m = 1.0 / m as f64;
    let mut out = ComplexMatrix::zeros(rows, rows);
    for i in 0..rows {
        for j in i..rows {
            let v: Complex64 = phi.row(i).iter().zip(phi.row(j)).map(|(a, b)| a * b.conj()).sum::<Complex64>() * inv_m;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
        out[(i, i)].im = 0.0;
    }
    Ok(out)
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
const HERMITIAN_REL_TOL: f64 = 1e-9;

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is symmetrised as `(A + A^H)/2` before iterating. Iteration stops
/// once the off-diagonal Frobenius norm drops below `1e-12·‖A‖_F`, or fails
/// after 100 sweeps. Values in `[-1e-12·‖A‖_F, 0)` are round-off on a PSD input
/// and are reported as zero; larger negative eigenvalues are kept.
pub fn eigvals_hermitian(a: &ComplexMatrix) -> Result<EigenSpectrum> {
    if !a.is_square() {
        return Err(Error::Shape(format!("eigenvalues need a square matrix, got {}×{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let max_abs = a.max_abs();
    let defect = a.hermitian_defect();
    let tolerance = HERMITIAN_REL_TOL * max_abs;
    if defect > tolerance {
        return Err(Error::NotHermitian { asymmetry: defect, tolerance });
    }

    let mut w = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let norm = w.frobenius_norm();
    let threshold = JACOBI_REL_TOL * norm;

    let off_norm = |w: &ComplexMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * w[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0 || off_norm(&w) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, p, q);
            }
        }
        converged = off_norm(&w) <= threshold;
    }

    let round_off = JACOBI_REL_TOL * norm;
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let v = w[(i, i)].re;
            if v < 0.0 && v >= -round_off {
                0.0
            } else {
                v
            }
        })
        .collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(EigenSpectrum { values })
}

/// Annihilates `w[p][q]` with the unitary `J = diag(1, e^{-iφ})·R(θ)` acting on
/// rows and columns `p`, `q`, where `φ = arg w[p][q]` and `R` is the real
/// Jacobi rotation for the phase-rotated (now real) off-diagonal entry.
fn rotate(w: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // Column entries of J: J_pp = c, J_pq = s, J_qp = -s·e^{-iφ}, J_qq = c·e^{-iφ}.
    let pc = phase.conj();
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -pc * s;
    let jqq = pc * c;

    let n = w.rows();
    // W ← W·J
    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = wkp * jpp + wkq * jqp;
        w[(k, q)] = wkp * jpq + wkq * jqq;
    }
    // W ← J^H·W
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = jpp.conj() * wpk + jqp.conj() * wqk;
        w[(q, k)] = jpq.conj() * wpk + jqq.conj() * wqk;
    }
    w[(p, q)] = Complex64::new(0.0, 0.0);
    w[(q, p)] = Complex64::new(0.0, 0.0);
    w[(p, p)].im = 0.0;
    w[(q, q)].im = 0.0;
}
