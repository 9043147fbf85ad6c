//! Angle thresholding and anomaly run extraction.
//!
//! Each frame is labeled `Anomaly` when its head angle exceeds `theta_head`
//! or either forearm elevation exceeds `theta_hand` (strict inequalities),
//! and `NormalDriving` otherwise. Contiguous anomaly runs then become
//! half-open segments `[t(first), t(last) + 1/fps)`, with runs separated by
//! at most `gap_tolerance` seconds of normal driving merged together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::AngleSample;
use crate::trace_io::check_fps;

/// Slack for comparing gap durations built from `frame / fps` arithmetic.
const GAP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    /// Head angle threshold, degrees.
    pub theta_head: f64,
    /// Forearm elevation threshold, degrees.
    pub theta_hand: f64,
    /// Longest normal-driving gap (seconds) absorbed between two runs.
    pub gap_tolerance: f64,
    /// Frames with no defined angle repeat the previous label.
    pub carry_forward: bool,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            theta_head: 25.0,
            theta_hand: 40.0,
            gap_tolerance: 0.5,
            carry_forward: true,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_head.is_finite() && self.theta_head > 0.0) {
            return Err(Error::Config(format!(
                "theta_head must be > 0, got {}",
                self.theta_head
            )));
        }
        if !self.theta_hand.is_finite() {
            return Err(Error::Config(format!(
                "theta_hand must be finite, got {}",
                self.theta_hand
            )));
        }
        if !(self.gap_tolerance.is_finite() && self.gap_tolerance >= 0.0) {
            return Err(Error::Config(format!(
                "gap_tolerance must be >= 0, got {}",
                self.gap_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    Anomaly,
    NormalDriving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub frame: u64,
    pub t: f64,
    pub label: Activity,
}

/// A half-open anomaly interval in one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub video_id: String,
    pub start: f64,
    pub end: f64,
    /// Frames spanned, including any absorbed gap frames.
    pub frames: u64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

pub fn classify_frame(sample: &AngleSample, cfg: &SegmenterConfig, prev: Option<&FrameLabel>) -> FrameLabel {
    let exceeds = |angle: Option<f64>, threshold: f64| angle.is_some_and(|a| a > threshold);
    let label = if exceeds(sample.head_angle, cfg.theta_head)
        || exceeds(sample.left_hand_angle, cfg.theta_hand)
        || exceeds(sample.right_hand_angle, cfg.theta_hand)
    {
        Activity::Anomaly
    } else if sample.all_undefined() && cfg.carry_forward {
        prev.map_or(Activity::NormalDriving, |p| p.label)
    } else {
        Activity::NormalDriving
    };
    FrameLabel {
        frame: sample.frame,
        t: sample.t,
        label,
    }
}

/// Labels a whole angle series, threading the previous label through.
pub fn classify_series(samples: &[AngleSample], cfg: &SegmenterConfig) -> Vec<FrameLabel> {
    let mut out: Vec<FrameLabel> = Vec::with_capacity(samples.len());
    for s in samples {
        let label = classify_frame(s, cfg, out.last());
        out.push(label);
    }
    out
}

pub fn extract_segments(
    video_id: &str,
    labels: &[FrameLabel],
    fps: f64,
    cfg: &SegmenterConfig,
) -> Result<Vec<Segment>> {
    check_fps(fps)?;
    let period = 1.0 / fps;

    // Maximal runs as (first index, last index) into `labels`.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, l) in labels.iter().enumerate() {
        match (l.label, open) {
            (Activity::Anomaly, None) => open = Some(i),
            (Activity::NormalDriving, Some(first)) => {
                runs.push((first, i - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(first) = open {
        runs.push((first, labels.len() - 1));
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut last_index = 0usize;
    for (first, last) in runs {
        let start = labels[first].t;
        let end = labels[last].t + period;
        if let Some(prev) = segments.last_mut() {
            if start - prev.end <= cfg.gap_tolerance + GAP_EPSILON {
                prev.end = end;
                prev.frames += (last - last_index) as u64;
                last_index = last;
                continue;
            }
        }
        segments.push(Segment {
            video_id: video_id.to_string(),
            start,
            end,
            frames: (last - first + 1) as u64,
        });
        last_index = last;
    }
    Ok(segments)
}
