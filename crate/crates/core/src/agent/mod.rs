//! A small advantage actor-critic learner over flat observation encodings.

pub mod a2c;
pub mod categorical;
pub mod checkpoint;
pub mod config;
pub mod mlp;
pub mod train;

pub use a2c::{a2c_backward, a2c_loss, compute_advantages, ActionSelection, LossTerms, LossWeights, NetPolicy};
pub use categorical::{masked_categorical, Factorized};
pub use config::TrainConfig;
pub use mlp::MlpParams;
pub use train::{curve_csv, evaluate, random_baseline, train, train_env, CurveRow, EvalResult, TrainOutcome};
