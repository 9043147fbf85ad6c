//! Segment labeling from externally produced per-frame class scores.
//!
//! Score files are line-delimited JSON, `{"video_id":..,"frame":..,"scores":[16 floats]}`,
//! where index 0 is normal driving and 1..=15 are the activity classes. A
//! segment's label is the argmax over classes 1..=15 of the mean score of
//! the frames whose timestamp (`frame / fps`) falls inside it; ties go to
//! the lowest class id.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::Segment;
use crate::trace_io::check_fps;

pub const NUM_SCORES: usize = 16;
pub const NUM_ACTIVITIES: u8 = 15;

/// Slack on segment bounds when testing `frame / fps` membership.
const TIME_EPSILON: f64 = 1e-9;

const ACTIVITY_LABELS: [&str; NUM_ACTIVITIES as usize] = [
    "Drinking",
    "Phone Call(right)",
    "Phone Call(left)",
    "Eating",
    "Text (Right)",
    "Text (Left)",
    "Reaching behind",
    "Adjust control panel",
    "Pick up from floor (Driver)",
    "Pick up from floor (Passenger)",
    "Talk to passenger at the right",
    "Talk to passenger at backseat",
    "yawning",
    "Hand on head",
    "Singing or dancing with music",
];

/// One of the fifteen distracted-driving classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct ActivityClass(u8);

impl ActivityClass {
    pub fn new(id: i64) -> Result<Self> {
        if (1..=i64::from(NUM_ACTIVITIES)).contains(&id) {
            Ok(ActivityClass(id as u8))
        } else {
            Err(Error::InvalidActivity(id))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        ACTIVITY_LABELS[usize::from(self.0) - 1]
    }

    pub fn all() -> impl Iterator<Item = ActivityClass> {
        (1..=NUM_ACTIVITIES).map(ActivityClass)
    }
}

impl TryFrom<i64> for ActivityClass {
    type Error = Error;
    fn try_from(id: i64) -> Result<Self> {
        ActivityClass::new(id)
    }
}

impl From<ActivityClass> for u8 {
    fn from(c: ActivityClass) -> u8 {
        c.0
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.0, self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScores {
    pub video_id: String,
    pub frame: u64,
    pub scores: [f64; NUM_SCORES],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRecord {
    video_id: String,
    frame: u64,
    scores: Vec<f64>,
}

/// A classified anomaly interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub video_id: String,
    pub activity: ActivityClass,
    pub start: f64,
    pub end: f64,
}

impl LabeledEvent {
    pub fn new(video_id: impl Into<String>, activity: ActivityClass, start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::DegenerateInterval { start, end });
        }
        Ok(LabeledEvent {
            video_id: video_id.into(),
            activity,
            start,
            end,
        })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Outcome of labeling one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum Labeling {
    Labeled(LabeledEvent),
    /// No score frame fell inside the segment.
    Unclassified(Segment),
}

/// Streaming reader over a score file.
pub struct ScoreReader<R> {
    input: R,
    line: usize,
    buf: String,
    probabilities: bool,
    failed: bool,
}

impl<R: BufRead> ScoreReader<R> {
    pub fn new(input: R) -> Self {
        ScoreReader {
            input,
            line: 0,
            buf: String::new(),
            probabilities: false,
            failed: false,
        }
    }

    /// Additionally require every vector to be a probability distribution.
    pub fn probabilities(mut self, yes: bool) -> Self {
        self.probabilities = yes;
        self
    }

    fn read(&mut self) -> Result<Option<FrameScores>> {
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
            let rec: ScoreRecord =
                serde_json::from_str(text).map_err(|e| Error::malformed(self.line, e.to_string()))?;
            let scores: [f64; NUM_SCORES] = rec.scores.try_into().map_err(|v: Vec<f64>| Error::ScoreArity {
                line: self.line,
                found: v.len(),
            })?;
            self.check(&scores)?;
            return Ok(Some(FrameScores {
                video_id: rec.video_id,
                frame: rec.frame,
                scores,
            }));
        }
    }

    fn check(&self, scores: &[f64; NUM_SCORES]) -> Result<()> {
        let line = self.line;
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidScores {
                line,
                message: format!("score {i} is not finite"),
            });
        }
        if self.probabilities {
            if let Some(i) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
                return Err(Error::InvalidScores {
                    line,
                    message: format!("probability {i} = {} outside [0, 1]", scores[i]),
                });
            }
            let total: f64 = scores.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidScores {
                    line,
                    message: format!("probabilities sum to {total}"),
                });
            }
        }
        Ok(())
    }
}

impl<R: BufRead> Iterator for ScoreReader<R> {
    type Item = Result<FrameScores>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.read().transpose();
        if matches!(item, Some(Err(_))) {
            self.failed = true;
        }
        item
    }
}

/// Reads and validates a whole score file, keeping file order.
pub fn parse_scores<R: BufRead>(input: R) -> Result<Vec<FrameScores>> {
    ScoreReader::new(input).collect()
}

/// Running per-class sums for one segment.
#[derive(Debug, Clone, Default)]
struct Tally {
    sums: [f64; NUM_SCORES],
    count: usize,
}

impl Tally {
    fn add(&mut self, scores: &[f64; NUM_SCORES]) {
        for (acc, s) in self.sums.iter_mut().zip(scores) {
            *acc += s;
        }
        self.count += 1;
    }

    fn argmax(&self) -> Option<ActivityClass> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let mut best = 1usize;
        for class in 2..NUM_SCORES {
            if self.sums[class] / n > self.sums[best] / n {
                best = class;
            }
        }
        Some(ActivityClass(best as u8))
    }
}

/// Accumulates score frames against a fixed set of segments.
///
/// Score frames may arrive in any order and from any video; frames that fall
/// in no segment are ignored. This lets a score file be streamed once
/// against all segments of a run.
#[derive(Debug)]
pub struct SegmentLabeler {
    fps: f64,
    segments: Vec<Segment>,
    tallies: Vec<Tally>,
    // video id -> indices into `segments`, sorted by start
    by_video: HashMap<String, Vec<usize>>,
}

impl SegmentLabeler {
    pub fn new(segments: Vec<Segment>, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        let mut by_video: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in segments.iter().enumerate() {
            by_video.entry(s.video_id.clone()).or_default().push(i);
        }
        for idx in by_video.values_mut() {
            idx.sort_by(|&a, &b| segments[a].start.total_cmp(&segments[b].start));
        }
        let tallies = vec![Tally::default(); segments.len()];
        Ok(SegmentLabeler {
            fps,
            segments,
            tallies,
            by_video,
        })
    }

    pub fn add(&mut self, scores: &FrameScores) {
        let Some(idx) = self.by_video.get(&scores.video_id) else {
            return;
        };
        let t = scores.frame as f64 / self.fps;
        // Segments of a video are disjoint, so at most one can contain t.
        let segments = &self.segments;
        let pos = idx.partition_point(|&i| segments[i].start - TIME_EPSILON <= t);
        if pos == 0 {
            return;
        }
        let i = idx[pos - 1];
        if t < segments[i].end - TIME_EPSILON {
            self.tallies[i].add(&scores.scores);
        }
    }

    /// One outcome per segment, in the order the segments were given.
    pub fn finish(self) -> Vec<Labeling> {
        self.segments
            .into_iter()
            .zip(self.tallies)
            .map(|(seg, tally)| match tally.argmax() {
                Some(activity) => Labeling::Labeled(LabeledEvent {
                    video_id: seg.video_id,
                    activity,
                    start: seg.start,
                    end: seg.end,
                }),
                None => Labeling::Unclassified(seg),
            })
            .collect()
    }
}

/// Labels a single segment from the score frames that overlap it.
pub fn label_segment(segment: &Segment, scores: &[FrameScores], fps: f64) -> Result<Labeling> {
    let mut labeler = SegmentLabeler::new(vec![segment.clone()], fps)?;
    for s in scores {
        labeler.add(s);
    }
    Ok(labeler.finish().pop().expect("one segment in, one labeling out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: f64, end: f64) -> Segment {
        Segment {
            video_id: "v".into(),
            start,
            end,
            frames: 1,
        }
    }

    fn scores(frame: u64, pairs: &[(usize, f64)]) -> FrameScores {
        let mut s = [0.0; NUM_SCORES];
        for &(c, v) in pairs {
            s[c] = v;
        }
        FrameScores {
            video_id: "v".into(),
            frame,
            scores: s,
        }
    }

    fn labeled(l: Labeling) -> u8 {
        match l {
            Labeling::Labeled(e) => e.activity.id(),
            Labeling::Unclassified(_) => panic!("expected a label"),
        }
    }

    #[test]
    fn class_table_is_a_bijection() {
        let labels: std::collections::HashSet<_> = ActivityClass::all().map(|c| c.label()).collect();
        assert_eq!(labels.len(), 15);
        assert_eq!(ActivityClass::new(1).unwrap().label(), "Drinking");
        assert_eq!(ActivityClass::new(2).unwrap().label(), "Phone Call(right)");
        assert_eq!(ActivityClass::new(15).unwrap().label(), "Singing or dancing with music");
        assert!(ActivityClass::new(0).is_err());
        assert!(ActivityClass::new(16).is_err());
    }

    #[test]
    fn unanimous_class_wins() {
        let s: Vec<_> = (0..10).map(|f| scores(f, &[(7, 0.9), (0, 0.1)])).collect();
        assert_eq!(labeled(label_segment(&seg(0.0, 1.0), &s, 10.0).unwrap()), 7);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let s = vec![
            scores(0, &[(3, 0.4), (5, 0.4), (1, 0.1)]),
            scores(1, &[(3, 0.4), (5, 0.4)]),
        ];
        assert_eq!(labeled(label_segment(&seg(0.0, 1.0), &s, 10.0).unwrap()), 3);
    }

    #[test]
    fn normal_driving_score_is_ignored() {
        let s = vec![scores(0, &[(0, 0.9), (12, 0.1)])];
        assert_eq!(labeled(label_segment(&seg(0.0, 1.0), &s, 10.0).unwrap()), 12);
    }

    #[test]
    fn no_overlap_is_unclassified() {
        let s: Vec<_> = (50..60).map(|f| scores(f, &[(2, 1.0)])).collect();
        let out = label_segment(&seg(2.0, 3.0), &s, 10.0).unwrap();
        assert!(matches!(out, Labeling::Unclassified(_)));
    }

    #[test]
    fn only_frames_inside_half_open_interval_count() {
        // frames 10..20 at 10 fps are exactly [1.0, 2.0)
        let mut s: Vec<_> = (10..20).map(|f| scores(f, &[(4, 1.0)])).collect();
        s.push(scores(9, &[(6, 100.0)]));
        s.push(scores(20, &[(6, 100.0)]));
        assert_eq!(labeled(label_segment(&seg(1.0, 2.0), &s, 10.0).unwrap()), 4);
    }

    #[test]
    fn other_videos_are_ignored() {
        let mut other = scores(10, &[(9, 1.0)]);
        other.video_id = "w".into();
        let s = vec![other, scores(10, &[(8, 1.0)])];
        assert_eq!(labeled(label_segment(&seg(1.0, 2.0), &s, 10.0).unwrap()), 8);
    }

    #[test]
    fn parse_empty_and_zero_vectors() {
        assert!(parse_scores(&b""[..]).unwrap().is_empty());
        let line = format!(r#"{{"video_id":"v","frame":0,"scores":{:?}}}"#, [0.0; 16]);
        let parsed = parse_scores(line.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].scores, [0.0; 16]);
    }

    #[test]
    fn parse_rejects_wrong_arity_with_line() {
        let good = format!(r#"{{"video_id":"v","frame":0,"scores":{:?}}}"#, [0.0; 16]);
        let bad = format!(r#"{{"video_id":"v","frame":1,"scores":{:?}}}"#, [0.0; 15]);
        let err = parse_scores(format!("{good}\n{bad}\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::ScoreArity { line: 2, found: 15 }), "{err}");
    }

    #[test]
    fn parse_rejects_garbage_with_line() {
        let err = parse_scores(&b"\n\n{\"video_id\":"[..]).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn probability_mode_checks_sum() {
        let mut p = [0.0; 16];
        p[3] = 0.5;
        let line = format!(r#"{{"video_id":"v","frame":0,"scores":{p:?}}}"#);
        assert!(parse_scores(line.as_bytes()).is_ok());
        let strict: Result<Vec<_>> = ScoreReader::new(line.as_bytes()).probabilities(true).collect();
        assert!(matches!(strict, Err(Error::InvalidScores { line: 1, .. })));
        p[0] = 0.5;
        let line = format!(r#"{{"video_id":"v","frame":0,"scores":{p:?}}}"#);
        let ok: Result<Vec<_>> = ScoreReader::new(line.as_bytes()).probabilities(true).collect();
        assert!(ok.is_ok());
    }

    #[test]
    fn labeled_event_rejects_empty_interval() {
        let c = ActivityClass::new(1).unwrap();
        assert!(LabeledEvent::new("v", c, 2.0, 2.0).is_err());
        assert!(LabeledEvent::new("v", c, 2.0, 1.0).is_err());
    }
}
