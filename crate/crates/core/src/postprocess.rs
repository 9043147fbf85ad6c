//! Short-event filtering and the four-column submission format.
//!
//! A submission line is `"<video> <activity> <start> <end>\n"`: numeric video
//! id (1-based position of the video name in ascending order), activity id
//! 1..=15, and integer start/end seconds. No header. Ground-truth files use
//! the same format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::classifier::{ActivityClass, LabeledEvent};
use crate::error::{Error, Result};

/// Durations within this much of the threshold count as reaching it.
const DURATION_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubmissionRow {
    pub video: u32,
    pub activity: ActivityClass,
    pub start: u64,
    pub end: u64,
}

impl SubmissionRow {
    fn sort_key(&self) -> (u32, u64, ActivityClass, u64) {
        (self.video, self.start, self.activity, self.end)
    }

    /// The row as an event keyed by its numeric video id.
    pub fn to_event(&self) -> LabeledEvent {
        LabeledEvent {
            video_id: self.video.to_string(),
            activity: self.activity,
            start: self.start as f64,
            end: self.end as f64,
        }
    }
}

impl fmt::Display for SubmissionRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.video, self.activity.id(), self.start, self.end)
    }
}

/// Drops events strictly shorter than `min_duration` seconds.
pub fn filter_short(events: Vec<LabeledEvent>, min_duration: f64) -> Vec<LabeledEvent> {
    events
        .into_iter()
        .filter(|e| e.duration() >= min_duration - DURATION_EPSILON)
        .collect()
}

/// Assigns 1..=N to video names in ascending lexicographic order.
pub fn build_id_map<I, S>(video_ids: I) -> Result<BTreeMap<String, u32>>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let names: BTreeSet<String> = video_ids.into_iter().map(Into::into).collect();
    if names.is_empty() {
        return Err(Error::EmptyVideoSet);
    }
    Ok(names.into_iter().zip(1u32..).collect())
}

fn round_half_up(seconds: f64) -> u64 {
    (seconds + 0.5).floor().max(0.0) as u64
}

/// Rounds events to integer seconds and sorts them into submission order.
///
/// Rows that collapse to an empty interval after rounding are dropped with
/// a warning.
pub fn to_submission(events: &[LabeledEvent], id_map: &BTreeMap<String, u32>) -> Result<Vec<SubmissionRow>> {
    let mut rows = Vec::with_capacity(events.len());
    for e in events {
        let video = *id_map
            .get(&e.video_id)
            .ok_or_else(|| Error::UnknownVideo(e.video_id.clone()))?;
        let (start, end) = (round_half_up(e.start), round_half_up(e.end));
        if end <= start {
            warn!(
                "dropping event {} [{}, {}) of video {:?}: empty after rounding to {start}..{end}",
                e.activity.id(),
                e.start,
                e.end,
                e.video_id
            );
            continue;
        }
        rows.push(SubmissionRow {
            video,
            activity: e.activity,
            start,
            end,
        });
    }
    rows.sort_by_key(SubmissionRow::sort_key);
    Ok(rows)
}

pub fn write_submission<W: Write>(out: &mut W, rows: &[SubmissionRow]) -> Result<()> {
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn parse_row(text: &str, line: usize) -> Result<SubmissionRow> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::malformed(
            line,
            format!("expected 4 fields, found {}", fields.len()),
        ));
    }
    let num = |i: usize, what: &str| -> Result<u64> {
        fields[i]
            .parse::<u64>()
            .map_err(|_| Error::malformed(line, format!("{what} {:?} is not a nonnegative integer", fields[i])))
    };
    let video = num(0, "video id")?;
    let video = u32::try_from(video)
        .ok()
        .filter(|&v| v >= 1)
        .ok_or_else(|| Error::malformed(line, format!("video id {video} must be in 1..=u32::MAX")))?;
    let activity =
        ActivityClass::new(num(1, "activity id")? as i64).map_err(|e| Error::malformed(line, e.to_string()))?;
    let (start, end) = (num(2, "start")?, num(3, "end")?);
    if end <= start {
        return Err(Error::malformed(line, format!("end {end} must exceed start {start}")));
    }
    Ok(SubmissionRow {
        video,
        activity,
        start,
        end,
    })
}

/// Reads a submission or ground-truth file. Rows keep file order.
pub fn parse_submission<R: BufRead>(input: R) -> Result<Vec<SubmissionRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        rows.push(parse_row(text, i + 1)?);
    }
    Ok(rows)
}
