//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

use sigdim::linalg::ComplexMatrix;
use sigdim::nn::{Conv2dSpec, DenseSpec, Tensor};

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    a
}

/// Characteristic-polynomial coefficients `c[0..=n]` (`c[n] = 1`) by
/// Faddeev–LeVerrier. Real for Hermitian input.
pub fn char_poly(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[n] = Complex64::new(1.0, 0.0);
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1}·I
        let mut next = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    s += a[(i, l)] * m[l][j];
                }
                next[i][j] = s;
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for l in 0..n {
                tr += a[(i, l)] * m[l][i];
            }
        }
        c[n - k] = -tr / k as f64;
    }
    c.iter().map(|z| z.re).collect()
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &ci)| ci * i as f64).collect()
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = poly_eval(c, lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = poly_eval(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All roots of a polynomial known to have only real roots, ascending. The
/// roots of `p'` interlace those of `p`, so each gap between consecutive
/// critical points brackets exactly one root.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return vec![];
    }
    let lead = c[deg];
    let bound = 1.0 + c[..deg].iter().map(|v| (v / lead).abs()).fold(0.0, f64::max);
    let mut edges = vec![-bound];
    edges.extend(real_roots(&derivative(c)));
    edges.push(bound);
    edges.windows(2).map(|w| bisect(c, w[0], w[1])).collect()
}

/// Eigenvalues of a Hermitian matrix, descending, via the characteristic polynomial.
pub fn oracle_eigvals(a: &ComplexMatrix) -> Vec<f64> {
    let mut r = real_roots(&char_poly(a));
    r.reverse();
    r
}

/// Determinant from the characteristic polynomial: `det A = (−1)^n c₀`.
pub fn oracle_det(a: &ComplexMatrix) -> f64 {
    let c = char_poly(a);
    if a.rows() % 2 == 0 {
        c[0]
    } else {
        -c[0]
    }
}

/// Direct nested-loop cross-correlation of a `[C, H, W]` input.
pub fn naive_conv(x: &Tensor, w: &Tensor, b: &Tensor, spec: &Conv2dSpec) -> Tensor {
    let (c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (kh, kw) = spec.kernel;
    let (s, p) = (spec.stride, spec.padding as isize);
    let oh = (h + 2 * spec.padding - kh) / s + 1;
    let ow = (wd + 2 * spec.padding - kw) / s + 1;
    let mut out = vec![0.0; spec.out_channels * oh * ow];
    for o in 0..spec.out_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b.data()[o];
                for ci in 0..c {
                    for u in 0..kh {
                        for v in 0..kw {
                            let iy = (oy * s + u) as isize - p;
                            let ix = (ox * s + v) as isize - p;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                continue;
                            }
                            let xv = x.data()[(ci * h + iy as usize) * wd + ix as usize];
                            let wv = w.data()[((o * c + ci) * kh + u) * kw + v];
                            acc += xv * wv;
                        }
                    }
                }
                out[(o * oh + oy) * ow + ox] = acc;
            }
        }
    }
    Tensor::from_vec(&[spec.out_channels, oh, ow], out).unwrap()
}

pub fn random_tensor<R: Rng>(shape: &[usize], rng: &mut R) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Central difference of a scalar function of a tensor at one entry.
pub fn central_diff(t: &Tensor, index: usize, step: f64, mut f: impl FnMut(&Tensor) -> f64) -> f64 {
    let mut p = t.clone();
    p.data_mut()[index] += step;
    let plus = f(&p);
    p.data_mut()[index] -= 2.0 * step;
    let minus = f(&p);
    (plus - minus) / (2.0 * step)
}

pub fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-6;

fn rel(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Worst relative error over every entry of `t`, comparing `grad` against
/// central differences of `f`.
pub fn worst_error(t: &Tensor, grad: &Tensor, mut f: impl FnMut(&Tensor) -> f64) -> f64 {
    (0..t.len()).map(|i| rel(grad.data()[i], central_diff(t, i, STEP, &mut f))).fold(0.0, f64::max)
}

/// Conv layer under the probe loss `⟨G, conv(x)⟩`: errors for input, weights, bias.
pub fn conv_grad_errors<R: Rng>(spec: &Conv2dSpec, h: usize, w: usize, rng: &mut R) -> [f64; 3] {
    use sigdim::nn::{conv2d_backward, conv2d_forward};
    let x = random_tensor(&[spec.in_channels, h, w], rng);
    let wt = random_tensor(&spec.weight_shape(), rng);
    let b = random_tensor(&[spec.out_channels], rng);
    let y = conv2d_forward(&x, &wt, &b, spec).unwrap();
    let g = random_tensor(y.shape(), rng);
    let grads = conv2d_backward(&g, &x, &wt, spec, true).unwrap();
    [
        worst_error(&x, &grads.input, |p| dot(&g, &conv2d_forward(p, &wt, &b, spec).unwrap())),
        worst_error(&wt, &grads.weights, |p| dot(&g, &conv2d_forward(&x, p, &b, spec).unwrap())),
        worst_error(&b, &grads.bias, |p| dot(&g, &conv2d_forward(&x, &wt, p, spec).unwrap())),
    ]
}

pub fn dense_grad_errors<R: Rng>(spec: &DenseSpec, rng: &mut R) -> [f64; 3] {
    use sigdim::nn::{dense_backward, dense_forward};
    let x = random_tensor(&[spec.in_features], rng);
    let wt = random_tensor(&[spec.out_features, spec.in_features], rng);
    let b = random_tensor(&[spec.out_features], rng);
    let g = random_tensor(&[spec.out_features], rng);
    let grads = dense_backward(&g, &x, &wt, spec).unwrap();
    [
        worst_error(&x, &grads.input, |p| dot(&g, &dense_forward(p, &wt, &b, spec).unwrap())),
        worst_error(&wt, &grads.weights, |p| dot(&g, &dense_forward(&x, p, &b, spec).unwrap())),
        worst_error(&b, &grads.bias, |p| dot(&g, &dense_forward(&x, &wt, p, spec).unwrap())),
    ]
}

/// Entries within 10 steps of the kink are nudged away from it first.
pub fn relu_grad_error<R: Rng>(len: usize, rng: &mut R) -> f64 {
    use sigdim::nn::{relu_backward, relu_forward};
    let x = random_tensor(&[len], rng).map(|v| if v.abs() < 10.0 * STEP { v + 0.1 } else { v });
    let g = random_tensor(&[len], rng);
    let grad = relu_backward(&g, &x).unwrap();
    worst_error(&x, &grad, |p| dot(&g, &relu_forward(p)))
}

pub fn softmax_ce_grad_error<R: Rng>(classes: usize, rng: &mut R) -> f64 {
    use sigdim::nn::softmax_cross_entropy;
    let logits = random_tensor(&[classes], rng).map(|v| 3.0 * v);
    let label = rng.gen_range(0..classes);
    let (_, grad) = softmax_cross_entropy(logits.data(), label).unwrap();
    let grad = Tensor::from_vec(&[classes], grad).unwrap();
    worst_error(&logits, &grad, |p| softmax_cross_entropy(p.data(), label).unwrap().0)
}
