//! MP-GNN and 2-FGNN networks with hand-written backpropagation, and Adam
//! training on strong-branching targets.

pub mod features;
pub mod fgnn;
pub mod io;
pub mod mlp;
pub mod mpgnn;
pub mod params;
pub mod train;

use thiserror::Error;

pub use fgnn::fgnn2_forward;
pub use mpgnn::mpgnn_forward;
pub use params::{init_params, Arch, GnnParams, LayerParams};
pub use train::{
    forward, grad, loss, loss_and_grad, train, train_with, EpochRecord, LossCurve, LrSchedule, Sample, TrainConfig,
    TrainOutcome,
};

/// Message-passing layers used when none are specified.
pub const DEFAULT_LAYERS: usize = 2;
/// Embedding width used when none is specified.
pub const DEFAULT_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("parameters are for {found}, but {expected} was requested")]
    ArchMismatch { expected: Arch, found: Arch },
    #[error("sample {sample}: target has {found} entries, graph has {expected} variables")]
    TargetLength { sample: usize, expected: usize, found: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("parameter file: {0}")]
    Format(String),
}

pub(crate) fn check_arch(params: &GnnParams, expected: Arch) -> Result<(), NnError> {
    if params.arch != expected {
        return Err(NnError::ArchMismatch {
            expected,
            found: params.arch,
        });
    }
    Ok(())
}
