//! Horizontal-product recurrent network with parametric bias units.
//!
//! - [`net`]: configuration, weights and forward dynamics
//! - [`gradients`]: sequence cost, BPTT and a finite-difference oracle
//! - [`modes`]: learning, recognition and prediction
//! - [`trajectories`]: synthetic cosine/square/circle observation data
//! - [`harness`]: experiment pipelines, persistence and report files

pub mod error;
pub mod gradients;
pub mod harness;
pub mod modes;
pub mod net;
pub mod sequence;
pub mod trajectories;

pub use error::{Error, Result};
pub use gradients::{bptt, finite_diff_gradient, gradient_check, sequence_cost, GradientSet};
pub use net::{transfer, HiddenState, NetworkConfig, NetworkState, Params, StepCache};
pub use sequence::{ClassLabel, Color, InputFrame, LabeledSequence, ObservationSequence, SequenceLabel, Shape};
