//! A small dense deep-learning stack sized for image-to-image restoration:
//! 4D tensors, convolution/pooling/activation layers with exact reverse-mode
//! gradients, a residual U-Net, MSE loss and Adam with polynomial
//! learning-rate decay and global-norm gradient clipping.
//!
//! Everything is generic over the scalar: training runs in `f32`, while the
//! gradient checks run the identical code in `f64`.

mod adam;
mod checkpoint;
mod layers;
mod tensor;
mod train;
mod unet;

pub use adam::{adam_step, global_grad_norm, lr_at, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use layers::{
    conv2d_backward, conv2d_forward, maxpool2_backward, maxpool2_forward, mse_loss, relu_backward,
    relu_forward, tanh_backward, tanh_forward, upsample2_backward, upsample2_forward,
};
pub use tensor::Tensor4;
pub use train::{train, EpochLog, TrainConfig, TrainingLog};
pub use unet::{
    batch_to_images, images_to_batch, network_forward, ConvLayer, Gradients, NetworkParams,
    NetworkSpec, Trace,
};

/// Scalar type the stack runs on.
pub trait Real:
    num_traits::Float + num_traits::NumAssign + Send + Sync + std::fmt::Debug + 'static
{
    fn from_f64(v: f64) -> Self;
    fn into_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn into_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn into_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: String,
        expected: String,
        got: String,
    },
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: String },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad checkpoint: {why}")]
    Format {
        path: std::path::PathBuf,
        why: String,
    },
    #[error(transparent)]
    Tomo(#[from] rising_tomo::TomoError),
}
