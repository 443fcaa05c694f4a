use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &[Tensor], lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            step: 0,
            lr,
            beta1,
            beta2,
            eps,
            first: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn with_defaults(params: &[Tensor], lr: f64) -> Self {
        Self::new(params, lr, 0.9, 0.999, 1e-8)
    }
}

/// `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`, `θ ← θ − lr·m̂/(√v̂ + ε)`.
pub fn adam_step(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::Shape(format!(
            "{} parameters, {} gradients, {} moment buffers",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.first) {
        if p.shape() != g.shape() || p.len() != m.len() {
            return Err(Error::Shape(format!("parameter {:?} vs gradient {:?}", p.shape(), g.shape())));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.first).zip(&mut state.second) {
        for (((theta, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![Tensor::filled(&[3], 0.5)];
        let g = vec![Tensor::filled(&[3], 1.0)];
        let mut s = AdamState::with_defaults(&p, 1e-3);
        adam_step(&mut p, &g, &mut s).unwrap();
        for &v in p[0].data() {
            assert_abs_diff_eq!(v, 0.5 - 1e-3 / (1.0 + 1e-8), epsilon = 1e-15);
        }
        assert_eq!(s.step, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![Tensor::filled(&[2, 2], -1.25)];
        let before = p.clone();
        let g = vec![Tensor::zeros(&[2, 2])];
        let mut s = AdamState::with_defaults(&p, 1e-2);
        for _ in 0..5 {
            adam_step(&mut p, &g, &mut s).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = vec![Tensor::zeros(&[2])];
        let mut s = AdamState::with_defaults(&p, 1e-3);
        assert!(adam_step(&mut p, &[Tensor::zeros(&[3])], &mut s).is_err());
    }

    #[test]
    fn minimises_a_parabola() {
        // Independent scalar recursion of the same update rule.
        let (lr, b1, b2, eps) = (0.01, 0.9, 0.999, 1e-8);
        let (mut theta, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        let mut reference = Vec::new();
        for t in 1..=100 {
            let g = 2.0 * theta;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            theta -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
            reference.push(theta);
        }

        let mut p = vec![Tensor::filled(&[1], 1.0)];
        let mut s = AdamState::new(&p, lr, b1, b2, eps);
        let mut trace = Vec::new();
        for _ in 0..100 {
            let g = vec![p[0].map(|x| 2.0 * x)];
            adam_step(&mut p, &g, &mut s).unwrap();
            trace.push(p[0].data()[0]);
        }
        for (a, b) in trace.iter().zip(&reference) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        assert!(trace[99].abs() < 0.5);
        for w in trace[10..].windows(2) {
            assert!(w[1].abs() <= w[0].abs());
        }
    }
}
