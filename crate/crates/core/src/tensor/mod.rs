//! Exact reference tensors and CP decomposition.
//!
//! Everything here is plain `f64` arithmetic with a fixed reduction order, so
//! results are bitwise reproducible. The simulator's mapping layer checks
//! itself against these functions.

mod cp;
mod dense;
mod matrix;
mod ops;
mod random;
mod sparse;

pub use cp::{
    cp_als, fit, residual_norm, solve_normal_equations, CpAlsOptions, CpAlsResult, CpModel,
    MttkrpKernel, ReferenceKernel, SweepRecord, RIDGE_FACTOR,
};
pub use dense::DenseTensor;
pub use matrix::{FactorMatrix, Matrix};
pub(crate) use ops::check_factors;
pub use ops::{
    khatri_rao, khatri_rao_except, matricize, mttkrp_reference, tensorize, unfolding_strides,
    Matricization, Tensor,
};
pub use random::{random_dense, random_factors};
pub use sparse::SparseTensor;
