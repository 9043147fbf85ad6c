//! Synthetic traces, score files and ground truth from an event script.
//!
//! Every frame's pose is built by [`inverse_pose`] from three target
//! angles: all zero outside events, and the event's `magnitude` on its
//! driving signal inside one. Per-frame scores are one-hot on the event
//! class (class 0 outside events), optionally blended with uniform noise.
//! Coordinate noise is isotropic Gaussian in unit-square coordinates.
//! Output is a pure function of the script, so a fixed seed reproduces
//! byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::{ActivityClass, FrameScores, LabeledEvent, NUM_SCORES};
use crate::error::{Error, Result};
use crate::postprocess::{build_id_map, to_submission, write_submission};
use crate::segmenter::SegmenterConfig;
use crate::trace_io::{check_fps, Joint, Keypoint, KeypointFrame, VideoTrace};

pub const TRACE_FILE: &str = "trace.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.txt";

/// Raster size of generated traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSize {
    pub width: u32,
    pub height: u32,
}

impl Default for FrameSize {
    fn default() -> Self {
        FrameSize {
            width: 1280,
            height: 720,
        }
    }
}

impl FrameSize {
    fn aspect(self) -> f64 {
        f64::from(self.width) / f64::from(self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driver {
    Head,
    LeftHand,
    RightHand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEvent {
    pub activity: ActivityClass,
    pub start: f64,
    pub end: f64,
    pub driver: Driver,
    /// Angle in degrees the driver signal takes during the event.
    pub magnitude: f64,
}

/// Declarative description of one synthetic video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventScript {
    pub video_id: String,
    pub fps: f64,
    pub duration: f64,
    pub events: Vec<ScriptEvent>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Weight of uniform noise blended into the one-hot score vectors.
    #[serde(default)]
    pub score_noise: f64,
    #[serde(default)]
    pub frame_size: FrameSize,
}

/// A script file: several videos rendered into one bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthScript {
    pub videos: Vec<EventScript>,
}

impl SynthScript {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidScript(e.to_string()))
    }
}

impl EventScript {
    pub fn validate(&self, thresholds: &SegmenterConfig) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScript(format!("video {:?}: {msg}", self.video_id)));
        check_fps(self.fps)?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {} must be >= 0", self.noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.score_noise) {
            return bad(format!("score_noise {} outside [0, 1]", self.score_noise));
        }
        if self.frame_size.width == 0 || self.frame_size.height == 0 {
            return bad("frame size must be positive".into());
        }
        for e in &self.events {
            if !(e.start.is_finite()
                && e.end.is_finite()
                && 0.0 <= e.start
                && e.start < e.end
                && e.end <= self.duration)
            {
                return bad(format!(
                    "event [{}, {}) not inside [0, {}]",
                    e.start, e.end, self.duration
                ));
            }
            let (threshold, limit) = match e.driver {
                Driver::Head => (thresholds.theta_head, 180.0),
                Driver::LeftHand | Driver::RightHand => (thresholds.theta_hand, 90.0),
            };
            if !(e.magnitude > threshold && e.magnitude <= limit) {
                return bad(format!(
                    "event [{}, {}) magnitude {} must exceed threshold {threshold} and stay within {limit}",
                    e.start, e.end, e.magnitude
                ));
            }
        }
        let mut sorted: Vec<&ScriptEvent> = self.events.iter().collect();
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in sorted.windows(2) {
            if w[1].start < w[0].end {
                return bad(format!(
                    "events [{}, {}) and [{}, {}) overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                ));
            }
        }
        Ok(())
    }
}

// Pose layout in height units, x measured from the frame center.
const EYE_Y: f64 = 0.25;
const EYE_HALF_SPAN: f64 = 0.08;
const NOSE_LENGTH: f64 = 0.20;
const SHOULDER_Y: f64 = 0.55;
const SHOULDER_X: f64 = 0.30;
const ELBOW_Y: f64 = 0.70;
const ELBOW_X: f64 = 0.34;
const FOREARM_LENGTH: f64 = 0.20;

/// Joint coordinates (unit square) that realize the requested angles on
/// the default 1280x720 raster.
pub fn inverse_pose(head: f64, left_elevation: f64, right_elevation: f64) -> Result<BTreeMap<String, Keypoint>> {
    inverse_pose_in(FrameSize::default(), head, left_elevation, right_elevation)
}

pub fn inverse_pose_in(
    size: FrameSize,
    head: f64,
    left_elevation: f64,
    right_elevation: f64,
) -> Result<BTreeMap<String, Keypoint>> {
    if !(0.0..=180.0).contains(&head) {
        return Err(Error::AngleOutOfRange {
            what: "head angle",
            value: head,
        });
    }
    for (what, e) in [("left elevation", left_elevation), ("right elevation", right_elevation)] {
        if !(-90.0..=90.0).contains(&e) {
            return Err(Error::AngleOutOfRange { what, value: e });
        }
    }
    let aspect = size.aspect();
    let cx = aspect / 2.0;
    let (hs, hc) = head.to_radians().sin_cos();
    let (ls, lc) = left_elevation.to_radians().sin_cos();
    let (rs, rc) = right_elevation.to_radians().sin_cos();

    // The driver faces the camera, so their left side is on the image right.
    let joints = [
        (Joint::LeftEye, cx + EYE_HALF_SPAN, EYE_Y),
        (Joint::RightEye, cx - EYE_HALF_SPAN, EYE_Y),
        (Joint::Nose, cx + NOSE_LENGTH * hs, EYE_Y + NOSE_LENGTH * hc),
        (Joint::LeftShoulder, cx + SHOULDER_X, SHOULDER_Y),
        (Joint::RightShoulder, cx - SHOULDER_X, SHOULDER_Y),
        (Joint::LeftElbow, cx + ELBOW_X, ELBOW_Y),
        (Joint::RightElbow, cx - ELBOW_X, ELBOW_Y),
        (
            Joint::LeftWrist,
            cx + ELBOW_X - FOREARM_LENGTH * lc,
            ELBOW_Y - FOREARM_LENGTH * ls,
        ),
        (
            Joint::RightWrist,
            cx - ELBOW_X + FOREARM_LENGTH * rc,
            ELBOW_Y - FOREARM_LENGTH * rs,
        ),
    ];
    Ok(joints
        .into_iter()
        .map(|(j, x, y)| (j.name().to_string(), Keypoint::new(x / aspect, y, 1.0)))
        .collect())
}

/// A script exercising every activity class in every video.
///
/// Each video holds sixteen events: classes 1..=15 once each plus one
/// repeated class, in seeded random order. Events last 2 to 8 whole seconds
/// and are separated by 4 to 8 seconds of normal driving; the driving
/// signal cycles head, left hand, right hand with the class id. Videos are
/// named `video_00.mp4`, `video_01.mp4`, ...
pub fn catalog_script(videos: usize, fps: f64, noise_sigma: f64, seed: u64) -> SynthScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let videos = (0..videos)
        .map(|v| {
            let mut classes: Vec<i64> = (1..=i64::from(crate::classifier::NUM_ACTIVITIES)).collect();
            classes.push(v as i64 % 15 + 1);
            // Fisher-Yates with the seeded generator
            for i in (1..classes.len()).rev() {
                classes.swap(i, rng.gen_range(0..=i));
            }
            let mut t = rng.gen_range(3..=6) as f64;
            let events = classes
                .into_iter()
                .map(|class| {
                    let length = rng.gen_range(2..=8) as f64;
                    let (driver, magnitude) = match class % 3 {
                        0 => (Driver::Head, rng.gen_range(40.0..70.0)),
                        1 => (Driver::LeftHand, rng.gen_range(55.0..85.0)),
                        _ => (Driver::RightHand, rng.gen_range(55.0..85.0)),
                    };
                    let e = ScriptEvent {
                        activity: ActivityClass::new(class).expect("class in 1..=15"),
                        start: t,
                        end: t + length,
                        driver,
                        magnitude,
                    };
                    t += length + rng.gen_range(4..=8) as f64;
                    e
                })
                .collect();
            EventScript {
                video_id: format!("video_{v:02}.mp4"),
                fps,
                duration: t,
                events,
                noise_sigma,
                seed: seed.wrapping_mul(1000).wrapping_add(v as u64),
                score_noise: 0.0,
                frame_size: FrameSize::default(),
            }
        })
        .collect();
    SynthScript { videos }
}

/// Everything generated for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    /// Pixel-coordinate trace with explicit timestamps.
    pub trace: VideoTrace,
    pub scores: Vec<FrameScores>,
    pub events: Vec<LabeledEvent>,
}

pub fn generate(script: &EventScript, thresholds: &SegmenterConfig) -> Result<SynthVideo> {
    script.validate(thresholds)?;
    let size = script.frame_size;
    let mut events = script.events.clone();
    events.sort_by(|a, b| a.start.total_cmp(&b.start));

    let mut pose_rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut score_rng = ChaCha8Rng::seed_from_u64(script.seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = (script.noise_sigma > 0.0).then(|| Normal::new(0.0, script.noise_sigma).expect("sigma validated"));

    let mut trace = VideoTrace::new(script.video_id.clone(), script.fps);
    let mut scores = Vec::new();
    let mut next_event = 0usize;
    let mut frame = 0u64;
    loop {
        let t = frame as f64 / script.fps;
        if t >= script.duration {
            break;
        }
        while next_event < events.len() && events[next_event].end <= t {
            next_event += 1;
        }
        let active = events.get(next_event).filter(|e| e.start <= t);

        let (mut head, mut left, mut right) = (0.0, 0.0, 0.0);
        if let Some(e) = active {
            match e.driver {
                Driver::Head => head = e.magnitude,
                Driver::LeftHand => left = e.magnitude,
                Driver::RightHand => right = e.magnitude,
            }
        }
        let mut keypoints = inverse_pose_in(size, head, left, right)?;
        for k in keypoints.values_mut() {
            let (mut x, mut y) = (k.x, k.y);
            if let Some(n) = &noise {
                x += n.sample(&mut pose_rng);
                y += n.sample(&mut pose_rng);
            }
            k.x = x * f64::from(size.width);
            k.y = y * f64::from(size.height);
        }
        trace.frames.push(KeypointFrame {
            video_id: script.video_id.clone(),
            frame,
            t,
            width: size.width,
            height: size.height,
            normalized: false,
            keypoints,
        });

        let hot = active.map_or(0, |e| usize::from(e.activity.id()));
        let mut vector = [0.0; NUM_SCORES];
        vector[hot] = 1.0;
        if script.score_noise > 0.0 {
            let a = script.score_noise;
            for v in vector.iter_mut() {
                *v = (1.0 - a) * *v + a * score_rng.gen::<f64>();
            }
        }
        scores.push(FrameScores {
            video_id: script.video_id.clone(),
            frame,
            scores: vector,
        });
        frame += 1;
    }

    let events = events
        .iter()
        .map(|e| LabeledEvent::new(script.video_id.clone(), e.activity, e.start, e.end))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthVideo { trace, scores, events })
}

/// The three files of a generated bundle, already serialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthBundle {
    pub trace: Vec<u8>,
    pub scores: Vec<u8>,
    pub ground_truth: Vec<u8>,
}

impl SynthBundle {
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(TRACE_FILE), &self.trace)?;
        fs::write(dir.join(SCORES_FILE), &self.scores)?;
        fs::write(dir.join(GROUND_TRUTH_FILE), &self.ground_truth)?;
        Ok(())
    }
}

/// Renders every video of a script. Videos are written in ascending id
/// order; ground-truth ids follow [`build_id_map`].
pub fn generate_bundle(script: &SynthScript, thresholds: &SegmenterConfig) -> Result<SynthBundle> {
    let mut videos: Vec<&EventScript> = script.videos.iter().collect();
    videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    if let Some(w) = videos.windows(2).find(|w| w[0].video_id == w[1].video_id) {
        return Err(Error::InvalidScript(format!("duplicate video id {:?}", w[0].video_id)));
    }
    let id_map = build_id_map(videos.iter().map(|v| v.video_id.clone()))
        .map_err(|_| Error::InvalidScript("script has no videos".into()))?;

    let mut trace = Vec::new();
    let mut scores = Vec::new();
    let mut events = Vec::new();
    for v in videos {
        let rendered = generate(v, thresholds)?;
        crate::trace_io::write_trace(&mut trace, &rendered.trace)?;
        for s in &rendered.scores {
            serde_json::to_writer(&mut scores, s).map_err(std::io::Error::from)?;
            scores.write_all(b"\n")?;
        }
        events.extend(rendered.events);
    }
    let rows = to_submission(&events, &id_map)?;
    let mut ground_truth = Vec::new();
    write_submission(&mut ground_truth, &rows)?;
    Ok(SynthBundle {
        trace,
        scores,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script(events: Vec<ScriptEvent>) -> EventScript {
        EventScript {
            video_id: "v".into(),
            fps: 30.0,
            duration: 60.0,
            events,
            noise_sigma: 0.0,
            seed: 7,
            score_noise: 0.0,
            frame_size: FrameSize::default(),
        }
    }

    fn event(class: i64, start: f64, end: f64, driver: Driver, magnitude: f64) -> ScriptEvent {
        ScriptEvent {
            activity: ActivityClass::new(class).unwrap(),
            start,
            end,
            driver,
            magnitude,
        }
    }

    #[test]
    fn neutral_pose_has_all_joints() {
        let pose = inverse_pose(0.0, 0.0, 0.0).unwrap();
        for j in Joint::REQUIRED {
            let k = pose[j.name()];
            assert!((0.0..=1.0).contains(&k.x) && (0.0..=1.0).contains(&k.y), "{j:?}");
        }
    }

    #[test]
    fn rejects_out_of_range_angles() {
        assert!(inverse_pose(-1.0, 0.0, 0.0).is_err());
        assert!(inverse_pose(181.0, 0.0, 0.0).is_err());
        assert!(inverse_pose(0.0, 91.0, 0.0).is_err());
        assert!(inverse_pose(0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn overlapping_events_rejected() {
        let s = script(vec![
            event(1, 10.0, 20.0, Driver::Head, 40.0),
            event(2, 15.0, 25.0, Driver::LeftHand, 60.0),
        ]);
        assert!(matches!(
            generate(&s, &SegmenterConfig::default()),
            Err(Error::InvalidScript(_))
        ));
    }

    #[test]
    fn weak_magnitude_rejected() {
        let s = script(vec![event(1, 10.0, 20.0, Driver::Head, 20.0)]);
        assert!(generate(&s, &SegmenterConfig::default()).is_err());
        let s = script(vec![event(1, 10.0, 20.0, Driver::RightHand, 40.0)]);
        assert!(generate(&s, &SegmenterConfig::default()).is_err());
    }

    #[test]
    fn event_outside_duration_rejected() {
        let s = script(vec![event(1, 50.0, 61.0, Driver::Head, 40.0)]);
        assert!(generate(&s, &SegmenterConfig::default()).is_err());
    }

    #[test]
    fn scores_are_one_hot() {
        let s = script(vec![event(4, 20.0, 30.0, Driver::Head, 40.0)]);
        let v = generate(&s, &SegmenterConfig::default()).unwrap();
        assert_eq!(v.trace.frames.len(), 1800);
        assert_eq!(v.scores[599].scores[0], 1.0);
        assert_eq!(v.scores[600].scores[4], 1.0);
        assert_eq!(v.scores[899].scores[4], 1.0);
        assert_eq!(v.scores[900].scores[0], 1.0);
        assert_eq!(v.events.len(), 1);
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let mut s = script(vec![event(4, 20.0, 30.0, Driver::Head, 40.0)]);
        s.noise_sigma = 0.01;
        s.score_noise = 0.3;
        let bundle = SynthScript { videos: vec![s] };
        let a = generate_bundle(&bundle, &SegmenterConfig::default()).unwrap();
        let b = generate_bundle(&bundle, &SegmenterConfig::default()).unwrap();
        assert_eq!(a, b);
        let mut reseeded = bundle.clone();
        reseeded.videos[0].seed = 8;
        let c = generate_bundle(&reseeded, &SegmenterConfig::default()).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn ground_truth_uses_alphabetical_ids() {
        let mut a = script(vec![event(3, 5.0, 9.0, Driver::LeftHand, 60.0)]);
        a.video_id = "b.mp4".into();
        let mut b = script(vec![event(7, 1.0, 4.0, Driver::RightHand, 60.0)]);
        b.video_id = "a.mp4".into();
        let bundle = generate_bundle(&SynthScript { videos: vec![a, b] }, &SegmenterConfig::default()).unwrap();
        assert_eq!(String::from_utf8(bundle.ground_truth).unwrap(), "1 7 1 4\n2 3 5 9\n");
    }

    #[test]
    fn catalog_covers_every_class() {
        let s = catalog_script(3, 30.0, 0.0, 11);
        assert_eq!(s.videos.len(), 3);
        for v in &s.videos {
            assert_eq!(v.events.len(), 16);
            let classes: std::collections::BTreeSet<u8> = v.events.iter().map(|e| e.activity.id()).collect();
            assert_eq!(classes.len(), 15);
            v.validate(&SegmenterConfig::default()).unwrap();
        }
        assert_eq!(catalog_script(3, 30.0, 0.0, 11), s);
    }

    #[test]
    fn script_json_round_trips() {
        let s = SynthScript {
            videos: vec![script(vec![event(15, 1.0, 3.0, Driver::Head, 50.0)])],
        };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(SynthScript::from_json(&text).unwrap(), s);
        assert!(SynthScript::from_json(r#"{"videos":[],"extra":1}"#).is_err());
    }
}
