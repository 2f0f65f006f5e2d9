//! Deterministic numerical substrate: symmetric eigensolvers, quadrature and
//! a seeded Gaussian source.

pub mod eigen;
pub mod matrix;
pub mod quadrature;
pub mod random;

pub use eigen::{eigen_symmetric, eigenvalues_symmetric, Eigen, EigenMethod};
pub use matrix::{DenseMatrix, SymmetricMatrix};
pub use quadrature::{integrate, Cubature, Quadrature};
pub use random::RandomSource;
