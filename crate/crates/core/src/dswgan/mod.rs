//! The DS-WGAN simulator `h(g(Y; θ))` and its adversarial estimation.

mod model;
mod surrogate;
mod train;

pub use model::{DsWganModel, GeneratorGrad, ModelMetadata, Standardizer};
pub use surrogate::{surrogate_poisson_grad, PoissonSurrogate, DEFAULT_LAMBDA_MIN};
pub use train::{init_model, train, train_with_progress, LogRow, TrainingConfig, TrainingLog};
