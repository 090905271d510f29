//! Deterministic simulation of a rolling robot tracked by a camera, its own
//! odometry, its motion commands and an IMU, fused by a positioning model
//! with a feedback loop.

pub mod config;
pub mod nodes;
pub mod program;
pub mod sim;
pub mod sources;
pub mod track;

pub use config::{ConfigError, Rect, ScenarioConfig, SourceKind};
pub use program::{generate_input_program, ground_truth, Command, Trajectory};
pub use sim::{build_model, evaluate_with, run, RunOutput, SimError};
pub use track::{evaluate, Sample, Track, TrackError, TrackError2d};
