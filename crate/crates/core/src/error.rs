use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: duplicate frame index {frame} in video {video_id:?}")]
    DuplicateFrame { line: usize, video_id: String, frame: u64 },

    #[error(
        "line {line}: frame index {frame} follows {previous} in video {video_id:?}; frames must be strictly increasing"
    )]
    NonMonotoneFrame {
        line: usize,
        video_id: String,
        frame: u64,
        previous: u64,
    },

    #[error("line {line}: timestamp {t} precedes the previous frame's timestamp in video {video_id:?}")]
    NonMonotoneTime { line: usize, video_id: String, t: f64 },

    #[error("line {line}: video {video_id:?} reappears after other videos; records of one video must be contiguous")]
    NonContiguousVideo { line: usize, video_id: String },

    #[error("trace mixes videos {expected:?} and {found:?}")]
    MixedVideos { expected: String, found: String },

    #[error("frame rate must be positive and finite, got {0}")]
    InvalidFps(f64),

    #[error("line {line}: expected 16 class scores, found {found}")]
    ScoreArity { line: usize, found: usize },

    #[error("line {line}: {message}")]
    InvalidScores { line: usize, message: String },

    #[error("degenerate interval [{start}, {end})")]
    DegenerateInterval { start: f64, end: f64 },

    #[error("activity id {0} is outside 1..=15")]
    InvalidActivity(i64),

    #[error("video {0:?} has no numeric id")]
    UnknownVideo(String),

    #[error("cannot build a video id map from an empty set")]
    EmptyVideoSet,

    #[error("optimal matching is capped at 12x12, a candidate component has {predictions} predictions and {ground_truths} ground truths")]
    MatchingTooLarge { predictions: usize, ground_truths: usize },

    #[error("angle {value} out of range for {what}")]
    AngleOutOfRange { what: &'static str, value: f64 },

    #[error("invalid event script: {0}")]
    InvalidScript(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
