//! Mini-batch training with per-epoch logs, stratified k-fold
//! cross-validation with in-fold SMOTE, and seeded random hyperparameter
//! search.

mod cv;
mod fit;
mod search;

pub use cv::{cross_validate, fold_assignment, CvConfig, CvResult, DEFAULT_FOLDS};
pub use fit::{train, EpochLog, TrainConfig, EPOCH_TSV_HEADER};
pub use search::{random_search, Domain, Hyperparams, SearchOutcome, SearchSpace, Trial, TrialStatus};
