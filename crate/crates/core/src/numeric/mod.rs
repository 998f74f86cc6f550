//! Numerical building blocks: normal distribution, quadrature, small dense
//! matrices and scalar optimisation.

pub mod expint;
pub mod matrix;
pub mod maxplus;
pub mod normal;
pub mod optimize;
pub mod quadrature;

pub use matrix::SquareMatrix;
