//! Berry–Esseen bounds, cumulants and one-term Edgeworth corrections for
//! functionals living in a fixed Wiener chaos, with exact-in-law Monte Carlo
//! checks for three families: Toeplitz quadratic functionals, exploding
//! Brownian-sheet functionals, and Breuer–Major sums of fBm increments.
//!
//! The linear algebra, special functions, tensors and second-chaos cumulants
//! are generic over [`Real`] (f32 or f64); the Monte Carlo pipelines work in
//! f64. Aliases for the f64 instantiations live at the crate root.

// `!(x > 0)` style guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes and reference values are kept at their published digits.
#![allow(clippy::excessive_precision)]

pub mod breuer_major;
pub mod chaos2;
pub mod chaos_tensor;
pub mod combinatorics;
pub mod error;
pub mod mc_verify;
pub mod numerics;
pub mod real;
pub mod sheet;
pub mod stein_hermite;
pub mod toeplitz;

pub use error::{Error, Result};
pub use real::Real;

/// f64 instantiations of the generic core.
pub type Tensor = chaos_tensor::GridTensor<f64>;
pub type TensorArray = chaos_tensor::TensorArray<f64>;
pub type Spectrum = chaos2::Chaos2Spectrum<f64>;
pub type ApproxReport = chaos2::NormalApproxReport<f64>;
pub type VarianceReport = chaos_tensor::ChaosVarianceReport<f64>;
pub type Matrix = numerics::SymmetricMatrix<f64>;
pub type Dense = numerics::DenseMatrix<f64>;
