//! Unrolled training of the prediction network against a BFGS reference.

mod loss;
mod reference;
mod train;

pub use loss::{
    flatten, initial_carried, loss_and_grad, truncated_fd_grad, truncated_grad_oracle, unrolled_loss,
    unrolled_loss_with, BatchItem, Carried, Unroll,
};
pub use reference::{boundaries, precompute_reference, Excluded, ReferenceRow, ReferenceTable, SOLVED_GAP};
pub use train::{clip_global, history_csv, mean_loss, train, train_with, EpochObserver, EpochRecord, MetaAdam, TrainConfig, TrainOutcome};
