//! Minimal reverse-mode tensor core: the operations the tracker, heads and
//! encoder need, plus Adam and checkpointing.

mod adam;
mod checkpoint;
mod gemm;
mod param;
mod tape;
mod tensor;

#[cfg(test)]
mod tests;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{read_checkpoint, restore_into, write_checkpoint, CHECKPOINT_VERSION};
pub use param::{ParamGrads, ParamId, ParamStore, Parameter};
pub use tape::{Gradients, Tape, Var, NORM_EPSILON};
pub use tensor::Tensor;

#[allow(unused_imports)]
pub(crate) use tape::{log_sum_exp, sigmoid, softmax_in_place};

#[derive(Debug, thiserror::Error)]
pub enum NumericError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid tensor shape {shape:?}")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} does not match {len} values")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("cannot normalize a vector of norm {norm:e}")]
    DegenerateNorm { norm: f64 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("duplicate parameter name {0:?}")]
    DuplicateParameter(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NumericError> = std::result::Result<T, E>;
