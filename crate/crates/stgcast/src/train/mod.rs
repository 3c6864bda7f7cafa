//! Loss, normalization, the optimizer, the training loop, model-level
//! gradient checking, and the hyperparameter grid sweep.

mod adam;
mod fit;
mod gradcheck;
mod grid;
mod loss;
mod norm;

pub use adam::Adam;
pub use fit::{fit, EpochRecord, FitResult, TrainConfig, GRAD_CLIP_NORM};
pub use gradcheck::{gradient_check_model, GradCheckReport, ParamCheck, DEFAULT_TOLERANCE, FD_STEP};
pub use grid::{grid_results_csv, grid_search, GridResult, GridSpec, MAX_COMBOS};
pub use loss::regularized_loss;
pub use norm::NormStats;
