//! Per-frame head and forearm angles from normalized keypoints.
//!
//! Both angles are measured in the isotropic image plane: x-differences in
//! unit-square coordinates are multiplied by the frame's width/height ratio
//! before any trigonometry, unless aspect correction is switched off.
//!
//! * head angle: unsigned angle in `[0, 180]` between the eye-midpoint to
//!   nose vector and the downward image vertical. 0 for a frontal pose.
//! * hand angle: forearm elevation in `[-90, 90]`, i.e. the angle of the
//!   elbow to wrist vector above the horizontal. Image y grows downward.
//!
//! An angle is `None` when any joint it depends on is missing or below the
//! confidence threshold, or when the defining vector has zero length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace_io::{Joint, Keypoint, KeypointFrame, VideoTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicsConfig {
    pub conf_threshold: f64,
    pub aspect_correct: bool,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        KinematicsConfig {
            conf_threshold: 0.5,
            aspect_correct: true,
        }
    }
}

impl KinematicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.conf_threshold) {
            return Err(Error::Config(format!(
                "conf_threshold {} outside [0, 1]",
                self.conf_threshold
            )));
        }
        Ok(())
    }
}

/// Derived angles for one frame. `None` means undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSample {
    pub frame: u64,
    pub t: f64,
    pub head_angle: Option<f64>,
    pub left_hand_angle: Option<f64>,
    pub right_hand_angle: Option<f64>,
}

impl AngleSample {
    pub fn all_undefined(&self) -> bool {
        self.head_angle.is_none() && self.left_hand_angle.is_none() && self.right_hand_angle.is_none()
    }
}

fn gated(points: &[Option<Keypoint>], conf_threshold: f64) -> bool {
    points.iter().all(|p| matches!(p, Some(k) if k.conf >= conf_threshold))
}

/// Head deviation from vertical, in degrees.
///
/// `aspect` scales x-differences (pass 1.0 to disable correction).
pub fn head_angle(
    left_eye: Keypoint,
    right_eye: Keypoint,
    nose: Keypoint,
    aspect: f64,
    conf_threshold: f64,
) -> Option<f64> {
    if !gated(&[Some(left_eye), Some(right_eye), Some(nose)], conf_threshold) {
        return None;
    }
    let mid_x = 0.5 * (left_eye.x + right_eye.x);
    let mid_y = 0.5 * (left_eye.y + right_eye.y);
    let vx = (nose.x - mid_x) * aspect;
    let vy = nose.y - mid_y;
    if vx == 0.0 && vy == 0.0 {
        return None;
    }
    Some(vx.abs().atan2(vy).to_degrees())
}

/// Forearm elevation above horizontal, in degrees.
pub fn hand_angle(elbow: Keypoint, wrist: Keypoint, aspect: f64, conf_threshold: f64) -> Option<f64> {
    if !gated(&[Some(elbow), Some(wrist)], conf_threshold) {
        return None;
    }
    let dx = (wrist.x - elbow.x) * aspect;
    let dy = wrist.y - elbow.y;
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some((-dy).atan2(dx.abs()).to_degrees())
}

/// Angles of a single normalized frame.
pub fn frame_angles(frame: &KeypointFrame, cfg: &KinematicsConfig) -> AngleSample {
    let aspect = if cfg.aspect_correct { frame.aspect() } else { 1.0 };
    let th = cfg.conf_threshold;
    let j = |joint| frame.joint(joint);

    let head = match (j(Joint::LeftEye), j(Joint::RightEye), j(Joint::Nose)) {
        (Some(l), Some(r), Some(n)) => head_angle(l, r, n, aspect, th),
        _ => None,
    };
    let hand = |elbow, wrist| match (j(elbow), j(wrist)) {
        (Some(e), Some(w)) => hand_angle(e, w, aspect, th),
        _ => None,
    };
    AngleSample {
        frame: frame.frame,
        t: frame.t,
        head_angle: head,
        left_hand_angle: hand(Joint::LeftElbow, Joint::LeftWrist),
        right_hand_angle: hand(Joint::RightElbow, Joint::RightWrist),
    }
}

/// One sample per frame, in frame order. Expects a normalized trace.
pub fn angle_series(trace: &VideoTrace, cfg: &KinematicsConfig) -> Vec<AngleSample> {
    trace.frames.iter().map(|f| frame_angles(f, cfg)).collect()
}

/// Diagnostic dump record; undefined angles serialize as `null`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AngleRecord<'a> {
    pub video_id: &'a str,
    pub frame: u64,
    pub t: f64,
    pub head_angle: Option<f64>,
    pub left_hand_angle: Option<f64>,
    pub right_hand_angle: Option<f64>,
}

impl<'a> AngleRecord<'a> {
    pub fn new(video_id: &'a str, s: &AngleSample) -> Self {
        AngleRecord {
            video_id,
            frame: s.frame,
            t: s.t,
            head_angle: s.head_angle,
            left_hand_angle: s.left_hand_angle,
            right_hand_angle: s.right_hand_angle,
        }
    }
}
