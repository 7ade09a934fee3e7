use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Subgradient at zero is taken as zero.
pub fn relu_backward(x: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    if x.shape() != upstream.shape() {
        return Err(Error::Contract(format!(
            "relu upstream {:?} vs input {:?}",
            upstream.shape(),
            x.shape()
        )));
    }
    x.zip_map(upstream, |v, g| if v > 0.0 { g } else { 0.0 })
}
