use thiserror::Error;

use crate::tensor::Shape;

/// Errors produced by tensor construction, convolution setup and execution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("allocation refused: {0}")]
    AllocationRefused(String),

    #[error("invalid shape {0:?}: every dimension must be at least 1")]
    EmptyShape(Shape),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Shape, right: Shape },

    #[error("invalid convolution geometry: {0}")]
    InvalidGeometry(String),

    #[error("not eligible for the Winograd path ({0}); use reference::direct_conv or reference::im2col_conv")]
    NotWinogradEligible(String),

    #[error("unsupported output tile size m={0} (supported: 2, 4)")]
    UnsupportedTile(usize),

    #[error("matrix dimension mismatch: expected {expected:?}, got {got:?}")]
    MatrixDims {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("transform derivation failed: {0}")]
    Derivation(String),

    #[error("block {block} failed: {reason}")]
    BlockFailed { block: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
