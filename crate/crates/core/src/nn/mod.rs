//! Compact LSTM regressor trained under the asymmetric SLA loss.

mod gradcheck;
mod grid;
mod loss;
mod lstm;
mod model;
mod train;

pub use gradcheck::{check_gradients, check_gradients_with, GradientCheck};
pub use grid::{grid_search, GridPoint, GridSearchResult};
pub use loss::{mean_wmae, wmae, wmae_grad, LossConfig};
pub use lstm::{LstmParams, LstmSpec, Workspace};
pub use model::{ForecastModel, MODEL_FORMAT_VERSION};
pub use train::{train, train_network, ModelData, TrainConfig, TrainHistory, TrainedNetwork};
