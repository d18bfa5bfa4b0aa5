//! Trainable query models, losses, optimizers and the training loop.

mod encoder;
mod loss;
mod models;
mod optim;
mod train;

pub use encoder::{features, tokenize, Affine, QueryEncoder, Vocabulary, ENTITY_TOKEN, UNK};
pub use loss::{hits_at_1, LossKind, LossSpec};
pub use models::{
    build_model, restore_model, seed_batch, Leftover, Model, ModelConfig, ModelKind, MultihopModel,
    MultihopParts, QaModel, RecurrentHopModel, RecurrentTrace, TemplateModel,
};
pub use optim::{Optimizer, OptimizerSpec};
pub use train::{evaluate, target_indices, train, EpochMetrics, EvalMetrics, TrainConfig};
