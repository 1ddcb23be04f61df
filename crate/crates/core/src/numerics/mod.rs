//! Dense and sparse kernels, activations, Adam, seeded random streams and a
//! finite-difference gradient checker.
//!
//! Everything here works in `f64`. Kernels are pure: they take inputs by
//! reference and return fresh matrices.

mod adam;
mod dense;
mod gradcheck;
mod ops;
mod rng;
mod sparse;

pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use dense::DenseMatrix;
pub use gradcheck::{
    finite_difference_check, piecewise_difference_check, relative_error, FdReport, DEFAULT_FD_STEP,
};
pub use ops::{
    dropout, leaky_relu, leaky_relu_mask, log_sum_exp, relu, relu_mask, sigmoid, softmax_rows,
    softplus, sparse_dropout, DEFAULT_LEAKY_SLOPE,
};
pub(crate) use ops::softmax_in_place;
pub use rng::{derive_seed, RngStream, RNG_ALGORITHM};
pub use sparse::CsrMatrix;

/// Uniform Glorot initialization in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut RngStream) -> DenseMatrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.uniform_range(-limit, limit))
        .collect();
    DenseMatrix::from_vec(fan_in, fan_out, data).expect("length matches shape")
}
