//! Reconstruction models: architectures, baseline selection, training and scoring.

mod arch;
mod baseline;
mod train;

pub use arch::{build, ArchitectureKind, ArchitectureSpec, Hyper, CONV_KERNEL, DILATIONS};
pub use baseline::{select_baseline, BaselinePlan, BaselineSplit};
pub use train::{reconstruction_errors, score, score_raw, train, TrainPlan, TrainedModel};
