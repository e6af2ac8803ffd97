//! Hard-parameter-sharing multi-task model, composite loss, loss-weighting
//! strategies, and local training.

mod model;
mod train;
mod weighting;

pub use model::{
    composite_loss, effective_weights, scope_size, HardSharedModel, MtlCache, TaskRole, TaskSpec,
};
pub use train::{
    batch_tensor, label_of, local_train, LabelSource, LocalTrainConfig, LocalTrainOutcome,
};
pub use weighting::{
    elw_weights, expected_weights, sample_rlw, softmax_weights, uniform_weights, ObjectiveMode,
    RlwResample, WeightingKind, WeightingStrategy,
};
