use rand::Rng;

use crate::error::{invalid, Error, Result};

use super::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, flatten, relu_backward, relu_forward, LayerSpec,
};
use super::loss::softmax_cross_entropy;
use super::tensor::Tensor;

/// A feed-forward stack of layers and its parameters.
///
/// Parameters are stored flat: each convolution or dense layer owns two
/// consecutive tensors (weights, then bias), in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    layers: Vec<LayerSpec>,
    input_shape: Vec<usize>,
    params: Vec<Tensor>,
}

/// Activations recorded by [`Model::forward_cached`]: `inputs[i]` is the input of layer `i`.
pub struct ForwardCache {
    pub inputs: Vec<Tensor>,
    pub output: Tensor,
}

impl Model {
    /// He-uniform initialisation: weights ~ U(−a, a) with `a = √(6/fan_in)`
    /// (standard deviation `√(2/fan_in)`), biases zero.
    pub fn new<R: Rng + ?Sized>(layers: Vec<LayerSpec>, input_shape: &[usize], rng: &mut R) -> Result<Self> {
        let shapes = Self::param_shapes(&layers, input_shape)?;
        let mut params = Vec::with_capacity(shapes.len());
        for pair in shapes.chunks(2) {
            let (w, b) = (&pair[0], &pair[1]);
            let fan_in: usize = w[1..].iter().product();
            let bound = (6.0 / fan_in as f64).sqrt();
            let n: usize = w.iter().product();
            params.push(Tensor::from_vec(w, (0..n).map(|_| rng.gen_range(-bound..bound)).collect())?);
            params.push(Tensor::zeros(b));
        }
        Ok(Self { layers, input_shape: input_shape.to_vec(), params })
    }

    pub fn from_params(layers: Vec<LayerSpec>, input_shape: &[usize], params: Vec<Tensor>) -> Result<Self> {
        let shapes = Self::param_shapes(&layers, input_shape)?;
        if shapes.len() != params.len() {
            return Err(Error::Shape(format!("{} parameter tensors, architecture needs {}", params.len(), shapes.len())));
        }
        for (want, got) in shapes.iter().zip(&params) {
            if want.as_slice() != got.shape() {
                return Err(Error::Shape(format!("parameter shape {:?}, architecture needs {want:?}", got.shape())));
            }
        }
        Ok(Self { layers, input_shape: input_shape.to_vec(), params })
    }

    /// Shapes of all parameter tensors, validating the layer chain on the way.
    pub fn param_shapes(layers: &[LayerSpec], input_shape: &[usize]) -> Result<Vec<Vec<usize>>> {
        if layers.is_empty() {
            return Err(invalid("empty architecture"));
        }
        let mut shape = input_shape.to_vec();
        let mut out = Vec::new();
        for layer in layers {
            let next = layer.output_shape(&shape)?;
            match layer {
                LayerSpec::Conv2d(c) => {
                    out.push(c.weight_shape().to_vec());
                    out.push(vec![c.out_channels]);
                }
                LayerSpec::Dense(d) => {
                    out.push(vec![d.out_features, d.in_features]);
                    out.push(vec![d.out_features]);
                }
                LayerSpec::Relu | LayerSpec::Flatten => {}
            }
            shape = next;
        }
        if shape.len() != 1 {
            return Err(Error::Shape(format!("network output {shape:?} is not a vector")));
        }
        Ok(out)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn output_len(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                LayerSpec::Dense(d) => Some(d.out_features),
                _ => None,
            })
            .unwrap_or(0)
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        let s = input.shape();
        let ok = s == self.input_shape.as_slice() || (s.len() == self.input_shape.len() + 1 && s[1..] == self.input_shape[..]);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("model input {:?} does not match {:?}", s, self.input_shape)))
        }
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        let mut p = 0;
        for layer in &self.layers {
            let y = match layer {
                LayerSpec::Conv2d(c) => {
                    let y = conv2d_forward(&x, &self.params[p], &self.params[p + 1], c)?;
                    p += 2;
                    y
                }
                LayerSpec::Dense(d) => {
                    let y = dense_forward(&x, &self.params[p], &self.params[p + 1], d)?;
                    p += 2;
                    y
                }
                LayerSpec::Relu => relu_forward(&x),
                LayerSpec::Flatten => flatten(&x)?,
            };
            inputs.push(std::mem::replace(&mut x, y));
        }
        Ok(ForwardCache { inputs, output: x })
    }

    /// Logits for a single sample or a batch.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(input)?.output)
    }

    /// Parameter gradients given the gradient of the loss with respect to the output.
    pub fn backward(&self, cache: &ForwardCache, grad_output: Tensor) -> Result<Vec<Tensor>> {
        let mut grads: Vec<Option<Tensor>> = vec![None; self.params.len()];
        let mut g = grad_output;
        let mut p = self.params.len();
        let first_param_layer = self.layers.iter().position(LayerSpec::has_params);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[i];
            g = match layer {
                LayerSpec::Conv2d(c) => {
                    p -= 2;
                    let need = Some(i) != first_param_layer;
                    let cg = conv2d_backward(&g, x, &self.params[p], c, need)?;
                    grads[p] = Some(cg.weights);
                    grads[p + 1] = Some(cg.bias);
                    cg.input
                }
                LayerSpec::Dense(d) => {
                    p -= 2;
                    let dg = dense_backward(&g, x, &self.params[p], d)?;
                    grads[p] = Some(dg.weights);
                    grads[p + 1] = Some(dg.bias);
                    dg.input
                }
                LayerSpec::Relu => relu_backward(&g, x)?,
                LayerSpec::Flatten => g.reshape(x.shape())?,
            };
        }
        Ok(grads.into_iter().map(|t| t.expect("every parameter receives a gradient")).collect())
    }

    /// Mean cross-entropy over a batch, its parameter gradients, and the number
    /// of samples whose argmax matched the label.
    pub fn loss_and_grads(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Vec<Tensor>, usize)> {
        let cache = self.forward_cached(batch)?;
        let g = self.output_len();
        let logits = cache.output.data();
        let b = logits.len() / g;
        if b != labels.len() {
            return Err(Error::Shape(format!("{b} samples but {} labels", labels.len())));
        }
        let mut total = 0.0;
        let mut correct = 0;
        let mut grad = Vec::with_capacity(logits.len());
        for (row, &label) in logits.chunks(g).zip(labels) {
            let (loss, gr) = softmax_cross_entropy(row, label)?;
            total += loss;
            if argmax(row) == label {
                correct += 1;
            }
            grad.extend(gr.into_iter().map(|v| v / b as f64));
        }
        let grad = Tensor::from_vec(cache.output.shape(), grad)?;
        let grads = self.backward(&cache, grad)?;
        Ok((total / b as f64, grads, correct))
    }

    /// Cross-entropy of a single sample.
    pub fn loss(&self, input: &Tensor, label: usize) -> Result<f64> {
        Ok(softmax_cross_entropy(self.forward(input)?.data(), label)?.0)
    }
}

/// Index of the largest value; ties resolve to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn tiny() -> Vec<LayerSpec> {
        vec![
            LayerSpec::conv(2, 3, 3, 1, 1),
            LayerSpec::Relu,
            LayerSpec::conv(3, 4, 3, 2, 1),
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::dense(4 * 3 * 3, 5),
            LayerSpec::Relu,
            LayerSpec::dense(5, 3),
        ]
    }

    #[test]
    fn shapes_and_counts() {
        let m = Model::new(tiny(), &[2, 6, 6], &mut stream(0, Domain::Auxiliary, 0, 0)).unwrap();
        assert_eq!(m.params().len(), 8);
        assert_eq!(m.param_count(), 3 * 2 * 9 + 3 + 4 * 3 * 9 + 4 + 36 * 5 + 5 + 5 * 3 + 3);
        assert_eq!(m.output_len(), 3);
        assert!(Model::new(tiny(), &[3, 6, 6], &mut stream(0, Domain::Auxiliary, 0, 0)).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Model::new(tiny(), &[2, 6, 6], &mut stream(4, Domain::Training, 0, 0)).unwrap();
        let b = Model::new(tiny(), &[2, 6, 6], &mut stream(4, Domain::Training, 0, 0)).unwrap();
        assert_eq!(a, b);
        let bound = (6.0f64 / 18.0).sqrt();
        assert!(a.params()[0].data().iter().all(|w| w.abs() < bound));
        assert!(a.params()[1].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_input_yields_final_bias() {
        let mut m = Model::new(tiny(), &[2, 6, 6], &mut stream(1, Domain::Auxiliary, 0, 0)).unwrap();
        for p in [1, 3, 5] {
            m.params_mut()[p] = Tensor::zeros(m.params()[p].shape());
        }
        m.params_mut()[7] = Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        let y = m.forward(&Tensor::zeros(&[2, 6, 6])).unwrap();
        assert_eq!(y.data(), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.1, 3.0, -1.0, 0.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 2.0]), 0);
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        let m = Model::new(tiny(), &[2, 6, 6], &mut stream(2, Domain::Auxiliary, 0, 0)).unwrap();
        let mut rng = stream(3, Domain::Auxiliary, 0, 0);
        let xs: Vec<f64> = (0..2 * 72).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let batch = Tensor::from_vec(&[2, 2, 6, 6], xs.clone()).unwrap();
        let (_, gb, _) = m.loss_and_grads(&batch, &[0, 2]).unwrap();
        let s0 = Tensor::from_vec(&[1, 2, 6, 6], xs[..72].to_vec()).unwrap();
        let s1 = Tensor::from_vec(&[1, 2, 6, 6], xs[72..].to_vec()).unwrap();
        let (_, g0, _) = m.loss_and_grads(&s0, &[0]).unwrap();
        let (_, g1, _) = m.loss_and_grads(&s1, &[2]).unwrap();
        for ((b, a), c) in gb.iter().zip(&g0).zip(&g1) {
            for ((x, y), z) in b.data().iter().zip(a.data()).zip(c.data()) {
                assert!((x - 0.5 * (y + z)).abs() < 1e-12);
            }
        }
    }
}
