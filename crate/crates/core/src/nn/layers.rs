//! Forward and backward passes of the individual layer kinds.
//!
//! Convolutions use the cross-correlation convention (no kernel flip) and are
//! lowered to matrix products through an im2col buffer. Every function accepts
//! either a single sample (`[C, H, W]` / `[F]`) or a batch (`[B, C, H, W]` /
//! `[B, F]`) and returns the same rank it was given.

use crate::error::{Error, Result};

use super::gemm::{gemm, View};
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: usize,
}

impl Conv2dSpec {
    pub fn output_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel;
        if h + 2 * self.padding < kh || w + 2 * self.padding < kw {
            return Err(Error::Shape(format!("{h}×{w} input is smaller than the {kh}×{kw} kernel")));
        }
        Ok(((h + 2 * self.padding - kh) / self.stride + 1, (w + 2 * self.padding - kw) / self.stride + 1))
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kernel.0, self.kernel.1]
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }

    pub fn validate(&self) -> Result<()> {
        let (kh, kw) = self.kernel;
        if self.in_channels == 0 || self.out_channels == 0 || kh == 0 || kw == 0 || self.stride == 0 {
            return Err(Error::Shape(format!("degenerate convolution {self:?}")));
        }
        if self.padding >= kh || self.padding >= kw {
            return Err(Error::Shape(format!("padding {} must be smaller than the kernel", self.padding)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseSpec {
    pub in_features: usize,
    pub out_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2d(Conv2dSpec),
    Dense(DenseSpec),
    Relu,
    Flatten,
}

impl LayerSpec {
    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        LayerSpec::Conv2d(Conv2dSpec { in_channels, out_channels, kernel: (kernel, kernel), stride, padding })
    }

    pub fn dense(in_features: usize, out_features: usize) -> Self {
        LayerSpec::Dense(DenseSpec { in_features, out_features })
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv2d(_) | LayerSpec::Dense(_))
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            LayerSpec::Conv2d(c) => {
                c.validate()?;
                let [ch, h, w] = input else {
                    return Err(Error::Shape(format!("convolution needs a [C, H, W] input, got {input:?}")));
                };
                if *ch != c.in_channels {
                    return Err(Error::Shape(format!("convolution expects {} channels, got {ch}", c.in_channels)));
                }
                let (oh, ow) = c.output_size(*h, *w)?;
                Ok(vec![c.out_channels, oh, ow])
            }
            LayerSpec::Dense(d) => {
                if input != [d.in_features] {
                    return Err(Error::Shape(format!("dense layer expects [{}], got {input:?}", d.in_features)));
                }
                Ok(vec![d.out_features])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// Splits a tensor into (batch, per-sample shape), treating `rank`-dimensional
/// input as a batch of one.
fn batch_view(t: &Tensor, rank: usize) -> Result<(usize, bool, &[usize])> {
    let s = t.shape();
    if s.len() == rank {
        Ok((1, false, s))
    } else if s.len() == rank + 1 {
        Ok((s[0], true, &s[1..]))
    } else {
        Err(Error::Shape(format!("expected rank {rank} or {}, got shape {s:?}", rank + 1)))
    }
}

fn with_batch(batched: bool, b: usize, sample: &[usize]) -> Vec<usize> {
    let mut shape = Vec::with_capacity(sample.len() + 1);
    if batched {
        shape.push(b);
    }
    shape.extend_from_slice(sample);
    shape
}

fn check_conv_params(spec: &Conv2dSpec, weights: &Tensor, bias: Option<&Tensor>) -> Result<()> {
    spec.validate()?;
    if weights.shape() != spec.weight_shape() {
        return Err(Error::Shape(format!("conv weights {:?}, expected {:?}", weights.shape(), spec.weight_shape())));
    }
    if let Some(b) = bias {
        if b.shape() != [spec.out_channels] {
            return Err(Error::Shape(format!("conv bias {:?}, expected [{}]", b.shape(), spec.out_channels)));
        }
    }
    Ok(())
}

/// Unfolds one `[C, H, W]` sample into a `(C·kh·kw) × (H'·W')` patch matrix.
fn im2col(x: &[f64], spec: &Conv2dSpec, h: usize, w: usize, oh: usize, ow: usize, col: &mut [f64]) {
    let (kh, kw) = spec.kernel;
    let pad = spec.padding as isize;
    let p_len = oh * ow;
    for c in 0..spec.in_channels {
        let plane = &x[c * h * w..(c + 1) * h * w];
        for u in 0..kh {
            for v in 0..kw {
                let row = &mut col[((c * kh + u) * kw + v) * p_len..][..p_len];
                for oy in 0..oh {
                    let iy = (oy * spec.stride + u) as isize - pad;
                    let dst = &mut row[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * spec.stride + v) as isize - pad;
                        *d = if ix < 0 || ix >= w as isize { 0.0 } else { src[ix as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the input grid.
fn col2im(col: &[f64], spec: &Conv2dSpec, h: usize, w: usize, oh: usize, ow: usize, gx: &mut [f64]) {
    let (kh, kw) = spec.kernel;
    let pad = spec.padding as isize;
    let p_len = oh * ow;
    for c in 0..spec.in_channels {
        let plane = &mut gx[c * h * w..(c + 1) * h * w];
        for u in 0..kh {
            for v in 0..kw {
                let row = &col[((c * kh + u) * kw + v) * p_len..][..p_len];
                for oy in 0..oh {
                    let iy = (oy * spec.stride + u) as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for ox in 0..ow {
                        let ix = (ox * spec.stride + v) as isize - pad;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += row[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, spec: &Conv2dSpec) -> Result<Tensor> {
    check_conv_params(spec, weights, Some(bias))?;
    let (b, batched, sample) = batch_view(input, 3)?;
    let out_sample = LayerSpec::Conv2d(*spec).output_shape(sample)?;
    let (h, w) = (sample[1], sample[2]);
    let (oh, ow) = (out_sample[1], out_sample[2]);
    let in_len = spec.in_channels * h * w;
    let p_len = oh * ow;
    let out_len = spec.out_channels * p_len;
    let k = spec.patch_len();

    let mut out = vec![0.0; b * out_len];
    let mut col = vec![0.0; k * p_len];
    for n in 0..b {
        im2col(&input.data()[n * in_len..(n + 1) * in_len], spec, h, w, oh, ow, &mut col);
        let dst = &mut out[n * out_len..(n + 1) * out_len];
        for (o, chunk) in dst.chunks_mut(p_len).enumerate() {
            chunk.fill(bias.data()[o]);
        }
        gemm(
            View::row_major(weights.data(), spec.out_channels, k),
            View::row_major(&col, k, p_len),
            1.0,
            dst,
        );
    }
    Tensor::from_vec(&with_batch(batched, b, &out_sample), out)
}

/// Gradients of a convolution.
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Backward pass of [`conv2d_forward`]. `need_input_grad = false` skips the
/// (unused) input gradient of a first layer and returns zeros in its place.
pub fn conv2d_backward(
    grad_out: &Tensor,
    input: &Tensor,
    weights: &Tensor,
    spec: &Conv2dSpec,
    need_input_grad: bool,
) -> Result<ConvGrads> {
    check_conv_params(spec, weights, None)?;
    let (b, batched, sample) = batch_view(input, 3)?;
    let out_sample = LayerSpec::Conv2d(*spec).output_shape(sample)?;
    if grad_out.shape() != with_batch(batched, b, &out_sample).as_slice() {
        return Err(Error::Shape(format!(
            "output gradient {:?} does not match forward output {:?}",
            grad_out.shape(),
            with_batch(batched, b, &out_sample)
        )));
    }
    let (h, w) = (sample[1], sample[2]);
    let (oh, ow) = (out_sample[1], out_sample[2]);
    let in_len = spec.in_channels * h * w;
    let p_len = oh * ow;
    let out_len = spec.out_channels * p_len;
    let k = spec.patch_len();

    let mut gw = vec![0.0; spec.out_channels * k];
    let mut gb = vec![0.0; spec.out_channels];
    let mut gx = vec![0.0; b * in_len];
    let mut col = vec![0.0; k * p_len];
    let mut gcol = vec![0.0; k * p_len];
    for n in 0..b {
        let go = &grad_out.data()[n * out_len..(n + 1) * out_len];
        for (o, chunk) in go.chunks(p_len).enumerate() {
            gb[o] += chunk.iter().sum::<f64>();
        }
        im2col(&input.data()[n * in_len..(n + 1) * in_len], spec, h, w, oh, ow, &mut col);
        // dW += dY · colᵀ
        gemm(View::row_major(go, spec.out_channels, p_len), View::transposed(&col, p_len, k), 1.0, &mut gw);
        if need_input_grad {
            // dcol = Wᵀ · dY
            gemm(
                View::transposed(weights.data(), k, spec.out_channels),
                View::row_major(go, spec.out_channels, p_len),
                0.0,
                &mut gcol,
            );
            col2im(&gcol, spec, h, w, oh, ow, &mut gx[n * in_len..(n + 1) * in_len]);
        }
    }
    Ok(ConvGrads {
        input: Tensor::from_vec(input.shape(), gx)?,
        weights: Tensor::from_vec(&spec.weight_shape(), gw)?,
        bias: Tensor::from_vec(&[spec.out_channels], gb)?,
    })
}

fn check_dense_params(spec: &DenseSpec, weights: &Tensor, bias: Option<&Tensor>) -> Result<()> {
    if weights.shape() != [spec.out_features, spec.in_features] {
        return Err(Error::Shape(format!(
            "dense weights {:?}, expected [{}, {}]",
            weights.shape(),
            spec.out_features,
            spec.in_features
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [spec.out_features] {
            return Err(Error::Shape(format!("dense bias {:?}, expected [{}]", b.shape(), spec.out_features)));
        }
    }
    Ok(())
}

/// `y = W·x + b` with `W` stored as `[out, in]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, spec: &DenseSpec) -> Result<Tensor> {
    check_dense_params(spec, weights, Some(bias))?;
    let (b, batched, sample) = batch_view(input, 1)?;
    if sample != [spec.in_features] {
        return Err(Error::Shape(format!("dense layer expects [{}], got {sample:?}", spec.in_features)));
    }
    let mut out = Vec::with_capacity(b * spec.out_features);
    for _ in 0..b {
        out.extend_from_slice(bias.data());
    }
    gemm(
        View::row_major(input.data(), b, spec.in_features),
        View::transposed(weights.data(), spec.in_features, spec.out_features),
        1.0,
        &mut out,
    );
    Tensor::from_vec(&with_batch(batched, b, &[spec.out_features]), out)
}

pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn dense_backward(grad_out: &Tensor, input: &Tensor, weights: &Tensor, spec: &DenseSpec) -> Result<DenseGrads> {
    check_dense_params(spec, weights, None)?;
    let (b, batched, _) = batch_view(input, 1)?;
    if grad_out.shape() != with_batch(batched, b, &[spec.out_features]).as_slice() {
        return Err(Error::Shape(format!("output gradient {:?} does not match dense output", grad_out.shape())));
    }
    let mut gw = vec![0.0; spec.out_features * spec.in_features];
    gemm(
        View::transposed(grad_out.data(), spec.out_features, b),
        View::row_major(input.data(), b, spec.in_features),
        0.0,
        &mut gw,
    );
    let mut gb = vec![0.0; spec.out_features];
    for row in grad_out.data().chunks(spec.out_features) {
        for (g, x) in gb.iter_mut().zip(row) {
            *g += x;
        }
    }
    let mut gx = vec![0.0; b * spec.in_features];
    gemm(
        View::row_major(grad_out.data(), b, spec.out_features),
        View::row_major(weights.data(), spec.out_features, spec.in_features),
        0.0,
        &mut gx,
    );
    Ok(DenseGrads {
        input: Tensor::from_vec(input.shape(), gx)?,
        weights: Tensor::from_vec(&[spec.out_features, spec.in_features], gw)?,
        bias: Tensor::from_vec(&[spec.out_features], gb)?,
    })
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// Subgradient 0 at the kink.
pub fn relu_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    if grad_out.shape() != input.shape() {
        return Err(Error::Shape(format!("relu gradient {:?} vs input {:?}", grad_out.shape(), input.shape())));
    }
    let data = grad_out.data().iter().zip(input.data()).map(|(&g, &x)| if x > 0.0 { g } else { 0.0 }).collect();
    Tensor::from_vec(input.shape(), data)
}

/// `[C, H, W] → [C·H·W]`, or `[B, C, H, W] → [B, C·H·W]`.
pub fn flatten(input: &Tensor) -> Result<Tensor> {
    let s = input.shape();
    match s.len() {
        0 => Err(Error::Shape("cannot flatten a scalar".into())),
        3 => input.clone().reshape(&[input.len()]),
        4 => input.clone().reshape(&[s[0], s[1] * s[2] * s[3]]),
        _ => Ok(input.clone()),
    }
}
