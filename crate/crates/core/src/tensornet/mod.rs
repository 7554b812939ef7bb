//! A small, deterministic, double-precision network engine.
//!
//! Only what the crowd model needs: single-image tensors, strided and dilated
//! 2-D convolution, ReLU, channel concatenation, summed squared error, Adam,
//! and a central-difference gradient checker. Parameters live in a
//! [`ParamStore`] and layers refer to them by [`ParamId`], so the optimizer,
//! the checkpoint writer and the gradient checker all see one flat view.

mod checkpoint;
mod conv;
mod gradcheck;
mod ops;
mod params;
mod sequential;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointRecord, CHECKPOINT_MAGIC};
pub use conv::{conv_output_dim, ConvLayer, ConvSpec};
pub use gradcheck::{check_gradients, relative_error, GradCheckReport};
pub use ops::{concat_channels, mse_loss, relu, relu_backward, split_channels};
pub use params::{adam_step, AdamConfig, ParamId, ParamStore};
pub use sequential::{Layer, Sequential, Trace};
pub use tensor::{Shape, Tensor};
