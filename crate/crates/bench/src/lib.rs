//! Fixed inputs shared by the benchmarks.

use mirnet_core::eval::synth_dataset;
use mirnet_core::trainer::stack_windows;
use mirnet_core::Tensor;

/// Deterministic pseudo-random values in `[-1, 1)`.
pub fn filled(shape: &[usize], salt: u64) -> Tensor {
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    Tensor::from_fn(shape, |_| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    })
}

/// A `[batch, 500, 12]` synthetic batch with labels.
pub fn synth_batch(batch: usize) -> (Tensor, Vec<usize>) {
    let data = synth_dataset(batch.div_ceil(7), 1);
    stack_windows(data.iter().take(batch)).expect("non-empty batch")
}
