//! Core analysis pipeline for dual-IMU bowling throws.
//!
//! A wrist IMU supplies orientation quaternions and a leg IMU supplies
//! acceleration; from those the crate derives the arm swing-angle trace, gait
//! events of the non-bowling leg, per-phase quality degrees against coach
//! templates, common-error flags, a 21-dimensional feature vector and an
//! RBF-kernel SVM skill classifier. A deterministic throw simulator generates
//! labeled corpora for calibration and testing.

pub mod config;
pub mod error;
pub mod error_detection;
pub mod features;
pub mod formats;
pub mod gait;
pub mod pipeline;
pub mod quality;
pub mod quat;
pub mod segment;
pub mod sim;
pub mod svm;

pub use error::{Error, ErrorKind, Result};
