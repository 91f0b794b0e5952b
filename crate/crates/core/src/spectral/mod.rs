//! Periodic-box Fourier machinery: grids, transforms, the Leray projection,
//! spectral derivatives, and alias-free products.

mod fft;
mod field;
mod grid;
mod ops;
pub mod snapshot;

use thiserror::Error;

pub use field::{SpectralField, VectorField};
pub use grid::SpectralGrid;
pub use ops::{
    bilaplacian, dealiased_product, dealiased_product_spectral, divergence, gradient,
    gradient_ops, gradient_part, laplacian, leray_project, GradientOps,
};
pub(crate) use field::inverse_scalar;
pub(crate) use grid::Padding;
pub(crate) use ops::leray_project_in_place;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("points per axis must be even (got {0})")]
    OddGrid(usize),
    #[error("points per axis must be at least 8 (got {0})")]
    GridTooSmall(usize),
    #[error("box length must be positive and finite (got {0})")]
    BadLength(f64),
    #[error("unsupported dimension {0}")]
    BadDimension(usize),
    #[error("shape mismatch: expected {expected:?} (components, samples), got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("dealiased products take 2 or 3 factors (got {0})")]
    FactorCount(usize),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
