//! Temporal localization of anomalous driver activity from pose keypoint
//! traces, plus the overlap-based evaluation used to score it.
//!
//! The processing chain is
//!
//! ```text
//! trace_io -> kinematics -> segmenter -> classifier -> postprocess -> scorer
//! ```
//!
//! [`trace_io`] parses line-delimited keypoint traces and maps coordinates
//! into the unit square. [`kinematics`] turns each frame into a head angle
//! and two forearm elevations. [`segmenter`] thresholds those angles per
//! frame and groups anomalous frames into segments. [`classifier`] assigns
//! one of fifteen activity classes to each segment from externally produced
//! per-frame scores. [`postprocess`] drops sub-second events and writes the
//! four-column submission format, which [`scorer`] evaluates against ground
//! truth. [`synth`] produces closed-loop test data for all of the above.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod error;
pub mod kinematics;
pub mod pipeline;
pub mod postprocess;
pub mod scorer;
pub mod segmenter;
pub mod synth;
pub mod trace_io;

pub use error::{Error, Result};
