//! Symmetric contrastive training of the dual encoder.

mod adamw;
mod gradcheck;
mod loss;
mod schedule;
mod trainer;

pub use adamw::AdamW;
pub use gradcheck::{finite_diff_check, relative_error};
pub use loss::{contrastive_loss, contrastive_loss_grad, LossGrad, LossOptions};
pub use schedule::cosine_lr;
pub use trainer::{
    backward_and_step, batch_loss, batch_loss_and_grads, check_model_gradients, train, EpochLog,
    Example, TrainConfig, TrainSummary,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("contrastive loss needs at least 2 pairs, got {0}")]
    DegenerateBatch(usize),
    #[error("zero-norm embedding row {row} ({side})")]
    ZeroNormRow { side: &'static str, row: usize },
    #[error("shape mismatch: {0}")]
    DimMismatch(String),
    #[error("temperature must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("non-finite loss at step {step}: {detail}")]
    NonFiniteLoss { step: usize, detail: String },
    #[error("finite-difference epsilon must be positive")]
    ZeroEpsilon,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

pub type Result<T> = std::result::Result<T, TrainError>;
