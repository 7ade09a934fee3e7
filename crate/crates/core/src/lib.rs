//! Dilated residual network for myocardial infarction detection and
//! localization from 12-lead ECG.
//!
//! The crate covers the whole pipeline:
//!
//! - [`ops`] / [`tape`]: `f64` layer kernels with hand-written backward
//!   passes and a small reverse-mode tape that composes them.
//! - [`model`]: the per-lead 1-D front-end, dilated residual blocks and
//!   classifier head, with its 5,997 trainable parameters.
//! - [`trainer`]: Adam and the minibatch cross-entropy loop.
//! - [`ingest`]: WFDB (format 16) parsing, decimation to 100 Hz, 5 s
//!   segmentation, diagnosis labelling and subject-disjoint splits.
//! - [`eval`]: accuracy, confusion matrices, the cross-validation runner and
//!   a synthetic dataset for data-free testing.

pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod ingest;
pub mod model;
pub mod ops;
pub mod seed;
pub mod tape;
pub mod tensor;
pub mod trainer;

pub use error::{Error, FormatError, Result, WfdbError};
pub use model::{count_parameters, init_model, Architecture, ClassLabel, ModelParams};
pub use ops::Mode;
pub use tensor::Tensor;
