//! Seizure-onset prediction from single-channel ECG: ingest, filtering and
//! segmentation, time-frequency features, reconstruction models, anomaly
//! thresholding and evaluation.

pub mod anomaly;
pub mod cache;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod models;
pub mod preprocess;

pub use error::{EdfError, Error, Result};
