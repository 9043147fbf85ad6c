//! Keypoint trace files: parsing, validation and unit-square normalization.
//!
//! A trace file is line-delimited JSON, one record per frame:
//!
//! ```text
//! {"video_id":"a.mp4","frame":0,"width":1280,"height":720,"keypoints":{"nose":[640.0,360.0,0.98],...}}
//! ```
//!
//! `t` (seconds) is optional and derived as `frame / fps` when absent.
//! `normalized` (default `false`) declares that coordinates are already unit
//! fractions rather than pixels. Records of one video must be contiguous and
//! their frame indices strictly increasing.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The joints consumed by the angle computations.
///
/// Names follow the 17-point COCO body convention; any other names in a
/// record are carried through untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Joint {
    Nose,
    LeftEye,
    RightEye,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
}

impl Joint {
    pub const REQUIRED: [Joint; 9] = [
        Joint::Nose,
        Joint::LeftEye,
        Joint::RightEye,
        Joint::LeftShoulder,
        Joint::RightShoulder,
        Joint::LeftElbow,
        Joint::RightElbow,
        Joint::LeftWrist,
        Joint::RightWrist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Joint::Nose => "nose",
            Joint::LeftEye => "left_eye",
            Joint::RightEye => "right_eye",
            Joint::LeftShoulder => "left_shoulder",
            Joint::RightShoulder => "right_shoulder",
            Joint::LeftElbow => "left_elbow",
            Joint::RightElbow => "right_elbow",
            Joint::LeftWrist => "left_wrist",
            Joint::RightWrist => "right_wrist",
        }
    }

    /// The same joint on the other side of the body.
    pub fn mirrored(self) -> Joint {
        match self {
            Joint::Nose => Joint::Nose,
            Joint::LeftEye => Joint::RightEye,
            Joint::RightEye => Joint::LeftEye,
            Joint::LeftShoulder => Joint::RightShoulder,
            Joint::RightShoulder => Joint::LeftShoulder,
            Joint::LeftElbow => Joint::RightElbow,
            Joint::RightElbow => Joint::LeftElbow,
            Joint::LeftWrist => Joint::RightWrist,
            Joint::RightWrist => Joint::LeftWrist,
        }
    }
}

/// A detected 2D landmark, serialized as `[x, y, conf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub conf: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, conf: f64) -> Self {
        Keypoint { x, y, conf }
    }
}

impl From<[f64; 3]> for Keypoint {
    fn from([x, y, conf]: [f64; 3]) -> Self {
        Keypoint { x, y, conf }
    }
}

impl From<Keypoint> for [f64; 3] {
    fn from(k: Keypoint) -> Self {
        [k.x, k.y, k.conf]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    video_id: String,
    frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    width: u32,
    height: u32,
    #[serde(default)]
    normalized: bool,
    keypoints: BTreeMap<String, Keypoint>,
}

/// One frame of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointFrame {
    pub video_id: String,
    pub frame: u64,
    pub t: f64,
    pub width: u32,
    pub height: u32,
    pub normalized: bool,
    pub keypoints: BTreeMap<String, Keypoint>,
}

impl KeypointFrame {
    pub fn joint(&self, joint: Joint) -> Option<Keypoint> {
        self.keypoints.get(joint.name()).copied()
    }

    /// Width over height of the source raster.
    pub fn aspect(&self) -> f64 {
        f64::from(self.width) / f64::from(self.height)
    }

    fn into_record(self) -> FrameRecord {
        FrameRecord {
            video_id: self.video_id,
            frame: self.frame,
            t: Some(self.t),
            width: self.width,
            height: self.height,
            normalized: self.normalized,
            keypoints: self.keypoints,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrace {
    pub video_id: String,
    pub fps: f64,
    pub frames: Vec<KeypointFrame>,
}

impl VideoTrace {
    pub fn new(video_id: impl Into<String>, fps: f64) -> Self {
        VideoTrace {
            video_id: video_id.into(),
            fps,
            frames: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub(crate) fn check_fps(fps: f64) -> Result<()> {
    if fps.is_finite() && fps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidFps(fps))
    }
}

fn validate_record(record: &FrameRecord, line: usize) -> Result<()> {
    if record.width == 0 || record.height == 0 {
        return Err(Error::malformed(
            line,
            format!("frame size {}x{} must be positive", record.width, record.height),
        ));
    }
    if let Some(t) = record.t {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::malformed(
                line,
                format!("timestamp {t} must be finite and nonnegative"),
            ));
        }
    }
    for (name, k) in &record.keypoints {
        if !k.x.is_finite() || !k.y.is_finite() {
            return Err(Error::malformed(
                line,
                format!("keypoint {name:?} has non-finite coordinates"),
            ));
        }
        if !(0.0..=1.0).contains(&k.conf) {
            return Err(Error::malformed(
                line,
                format!("keypoint {name:?} confidence {} outside [0, 1]", k.conf),
            ));
        }
    }
    Ok(())
}

/// Streams a trace file one video at a time.
///
/// Memory is bounded by the largest single video in the file.
pub struct TraceReader<R> {
    input: R,
    fps: f64,
    line: usize,
    buf: String,
    pending: Option<KeypointFrame>,
    seen: HashSet<String>,
    failed: bool,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(input: R, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        Ok(TraceReader {
            input,
            fps,
            line: 0,
            buf: String::new(),
            pending: None,
            seen: HashSet::new(),
            failed: false,
        })
    }

    fn next_frame(&mut self) -> Result<Option<KeypointFrame>> {
        loop {
            self.buf.clear();
            if self.input.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            let record: FrameRecord =
                serde_json::from_str(text).map_err(|e| Error::malformed(self.line, e.to_string()))?;
            validate_record(&record, self.line)?;
            let t = record.t.unwrap_or(record.frame as f64 / self.fps);
            return Ok(Some(KeypointFrame {
                video_id: record.video_id,
                frame: record.frame,
                t,
                width: record.width,
                height: record.height,
                normalized: record.normalized,
                keypoints: record.keypoints,
            }));
        }
    }

    fn read_video(&mut self) -> Result<Option<VideoTrace>> {
        let first = match self.pending.take() {
            Some(f) => f,
            None => match self.next_frame()? {
                Some(f) => f,
                None => return Ok(None),
            },
        };
        if !self.seen.insert(first.video_id.clone()) {
            return Err(Error::NonContiguousVideo {
                line: self.line,
                video_id: first.video_id,
            });
        }
        let mut trace = VideoTrace::new(first.video_id.clone(), self.fps);
        trace.frames.push(first);
        while let Some(frame) = self.next_frame()? {
            if frame.video_id != trace.video_id {
                self.pending = Some(frame);
                break;
            }
            let prev = trace.frames.last().expect("trace has a first frame");
            if frame.frame == prev.frame {
                return Err(Error::DuplicateFrame {
                    line: self.line,
                    video_id: frame.video_id,
                    frame: frame.frame,
                });
            }
            if frame.frame < prev.frame {
                return Err(Error::NonMonotoneFrame {
                    line: self.line,
                    video_id: frame.video_id,
                    frame: frame.frame,
                    previous: prev.frame,
                });
            }
            if frame.t < prev.t {
                return Err(Error::NonMonotoneTime {
                    line: self.line,
                    video_id: frame.video_id,
                    t: frame.t,
                });
            }
            trace.frames.push(frame);
        }
        Ok(Some(trace))
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<VideoTrace>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.read_video().transpose();
        if matches!(item, Some(Err(_))) {
            self.failed = true;
        }
        item
    }
}

/// Parses a single-video trace. Empty input yields an empty trace.
pub fn parse_trace<R: BufRead>(input: R, fps: f64) -> Result<VideoTrace> {
    let mut reader = TraceReader::new(input, fps)?;
    let trace = match reader.next().transpose()? {
        Some(t) => t,
        None => return Ok(VideoTrace::new("", fps)),
    };
    if let Some(other) = reader.next().transpose()? {
        return Err(Error::MixedVideos {
            expected: trace.video_id,
            found: other.video_id,
        });
    }
    Ok(trace)
}

/// Parses every video of a multi-video trace, in file order.
pub fn parse_traces<R: BufRead>(input: R, fps: f64) -> Result<Vec<VideoTrace>> {
    TraceReader::new(input, fps)?.collect()
}

/// Writes a trace in canonical form (explicit `t`, keys sorted).
pub fn write_trace<W: Write>(out: &mut W, trace: &VideoTrace) -> Result<()> {
    for frame in &trace.frames {
        let record = frame.clone().into_record();
        serde_json::to_writer(&mut *out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Maps pixel coordinates into the unit square and clamps stragglers.
///
/// Returns the normalized trace and the number of keypoints that had to be
/// clamped. Frames already flagged `normalized` are only clamped, so the
/// operation is idempotent.
pub fn normalize_coordinates(mut trace: VideoTrace) -> (VideoTrace, usize) {
    let mut clamped = 0;
    for frame in &mut trace.frames {
        let (w, h) = (f64::from(frame.width), f64::from(frame.height));
        for k in frame.keypoints.values_mut() {
            let (mut x, mut y) = (k.x, k.y);
            if !frame.normalized {
                x /= w;
                y /= h;
            }
            let (cx, cy) = (x.clamp(0.0, 1.0), y.clamp(0.0, 1.0));
            if cx != x || cy != y {
                clamped += 1;
            }
            k.x = cx;
            k.y = cy;
        }
        frame.normalized = true;
    }
    (trace, clamped)
}
