//! Learning, recognition and prediction modes.

mod pb;
mod predict;
mod recognize;
mod train;
mod update;

pub use pb::{axis_separability, classify_pb, euclidean, AxisAssignment, PbEntry, PbTable};
pub use predict::{per_unit_mse, predict, step_errors};
pub use recognize::{recognize, RecognitionEpoch, RecognitionTrace};
pub use train::{train, train_with, EpochStats, TrainConfig, TrainOutcome};
pub use update::{apply_weight_update, pb_rates, update_learning_rates, update_pb_learning};
