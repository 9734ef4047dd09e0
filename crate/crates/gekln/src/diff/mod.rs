//! Dense-tensor numerical core: storage, a reverse-mode tape, Xavier
//! initialization, and first-order optimizers.
//!
//! The operator set is exactly what the models in this crate need — this
//! is not a general autodiff library. All math is `f64`, single-threaded,
//! and iteration orders are fixed, so identical seeds and inputs produce
//! bit-identical results.

mod init;
mod optim;
mod params;
mod tape;
mod tensor;

pub use init::xavier_init;
pub use optim::{optimizer_step, OptimizerConfig, OptimizerKind};
pub use params::{ParameterStore, SlotId};
pub use tape::{NodeId, Segments, Tape};
pub use tensor::Tensor;

use thiserror::Error;

/// Errors raised by tape construction and backward passes.
#[derive(Debug, Error)]
pub enum DiffError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: [usize; 2],
        rhs: [usize; 2],
    },
    #[error("row index {index} out of range in {op} (source has {rows} rows)")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        rows: usize,
    },
    #[error("backward called without a recorded forward trace")]
    NoTrace,
    #[error("backward target must be a 1x1 scalar, got {shape:?}")]
    NotScalar { shape: [usize; 2] },
}
