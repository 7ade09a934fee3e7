//! Forward and backward kernels for every layer primitive in the network.
//!
//! Each backward takes the forward inputs it needs explicitly; the
//! [`crate::tape::Tape`] keeps those values alive between the passes.

mod batchnorm;
mod conv1d;
mod conv2d;
mod dense;
mod pool;
mod relu;

pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormState, Mode,
    DEFAULT_BN_EPSILON, DEFAULT_BN_MOMENTUM,
};
pub use conv1d::{conv1d_backward, conv1d_forward, conv1d_frames, Conv1dSpec};
pub use conv2d::{conv2d_dilated_backward, conv2d_dilated_forward, Conv2dSpec};
pub use dense::{
    dense_backward, dense_forward, dense_softmax_xent, dense_softmax_xent_backward, softmax,
    softmax_rows, softmax_xent_backward, DenseSoftmaxGrads,
};
pub use pool::{global_avg_pool, global_avg_pool_backward};
pub use relu::{relu, relu_backward};
