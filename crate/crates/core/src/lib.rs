//! Crater-landmark localization for planetary rovers.

pub mod cli;
pub mod cloud;
pub mod config;
pub mod detection;
pub mod error;
pub mod eval;
pub mod landmarks;
pub mod lidar;
pub mod localizer;
pub mod pose;
pub mod sensor;
pub mod stereo;
pub mod terrain;

pub use detection::{CraterDetection, Method};
pub use error::{Error, Result};
pub use pose::Pose2;
