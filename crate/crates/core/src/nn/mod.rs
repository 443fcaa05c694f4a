//! A small CPU neural-network core: tensors, convolution, dense layers, ReLU,
//! softmax cross-entropy, Adam and gradient checking. All arithmetic is `f64`.

mod adam;
mod gemm;
mod gradcheck;
mod layers;
mod loss;
mod model;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport, ProbeResult};
pub use layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, flatten, relu_backward, relu_forward, Conv2dSpec,
    ConvGrads, DenseGrads, DenseSpec, LayerSpec,
};
pub use loss::{softmax, softmax_cross_entropy};
pub use model::{argmax, ForwardCache, Model};
pub use tensor::Tensor;
