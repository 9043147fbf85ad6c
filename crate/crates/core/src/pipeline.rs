//! End-to-end composition of the stages.
//!
//! Traces are streamed one video at a time and processed `jobs` videos at a
//! time on a dedicated worker pool; results are merged in video-id order, so
//! output never depends on scheduling. Score files are streamed once against
//! the full set of segments.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use log::{debug, warn};
use rayon::prelude::*;

use crate::classifier::{Labeling, ScoreReader, SegmentLabeler};
use crate::config::PipelineConfig;
use crate::error::{Error, Result, StageExt};
use crate::kinematics::{angle_series, AngleRecord, AngleSample};
use crate::postprocess::{build_id_map, filter_short, to_submission, SubmissionRow};
use crate::segmenter::{classify_series, extract_segments, Segment};
use crate::trace_io::{normalize_coordinates, TraceReader, VideoTrace};

/// Per-video output of the segmentation stages.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSegments {
    pub video_id: String,
    pub segments: Vec<Segment>,
    /// Present only when angle output was requested.
    pub angles: Option<Vec<AngleSample>>,
}

/// Normalize, measure, threshold and group one video.
pub fn segment_video(trace: VideoTrace, cfg: &PipelineConfig, keep_angles: bool) -> Result<VideoSegments> {
    let (trace, clamped) = normalize_coordinates(trace);
    if clamped > 0 {
        debug!("video {:?}: clamped {clamped} out-of-frame keypoints", trace.video_id);
    }
    let angles = angle_series(&trace, &cfg.kinematics());
    let labels = classify_series(&angles, &cfg.segmenter());
    let segments = extract_segments(&trace.video_id, &labels, cfg.fps, &cfg.segmenter()).stage("segmenter")?;
    Ok(VideoSegments {
        video_id: trace.video_id,
        segments,
        angles: keep_angles.then_some(angles),
    })
}

fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Segments every video of a trace stream, sorted by video id.
pub fn segment_traces<R: BufRead>(input: R, cfg: &PipelineConfig, keep_angles: bool) -> Result<Vec<VideoSegments>> {
    let pool = worker_pool(cfg.jobs)?;
    let mut reader = TraceReader::new(input, cfg.fps).stage("trace_io")?;
    let mut out = Vec::new();
    loop {
        let batch: Vec<VideoTrace> = reader
            .by_ref()
            .take(cfg.jobs)
            .collect::<Result<_>>()
            .stage("trace_io")?;
        if batch.is_empty() {
            break;
        }
        let done: Vec<Result<VideoSegments>> = pool.install(|| {
            batch
                .into_par_iter()
                .map(|trace| segment_video(trace, cfg, keep_angles))
                .collect()
        });
        for r in done {
            out.push(r?);
        }
    }
    out.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    Ok(out)
}

/// Labels segments from a score stream and emits submission rows.
///
/// `known_videos` seeds the numeric id map; every video seen in the score
/// stream or the segments is added to it unless `video_list` pins the
/// map exactly.
pub fn classify_and_submit<R: BufRead>(
    segments: Vec<Segment>,
    scores: R,
    cfg: &PipelineConfig,
    known_videos: impl IntoIterator<Item = String>,
    video_list: Option<&[String]>,
) -> Result<Vec<SubmissionRow>> {
    let mut video_ids: BTreeSet<String> = known_videos.into_iter().collect();
    video_ids.extend(segments.iter().map(|s| s.video_id.clone()));

    let mut labeler = SegmentLabeler::new(segments, cfg.fps).stage("classifier")?;
    for record in ScoreReader::new(scores) {
        let record = record.stage("classifier")?;
        if !video_ids.contains(&record.video_id) {
            video_ids.insert(record.video_id.clone());
        }
        labeler.add(&record);
    }

    let mut events = Vec::new();
    for outcome in labeler.finish() {
        match outcome {
            Labeling::Labeled(e) => events.push(e),
            Labeling::Unclassified(s) => warn!(
                "dropping unclassified segment [{}, {}) of video {:?}: no score frames overlap it",
                s.start, s.end, s.video_id
            ),
        }
    }
    let events = filter_short(events, cfg.min_duration);

    let id_map = match video_list {
        Some(list) => build_id_map(list.iter().cloned()),
        None => build_id_map(video_ids),
    };
    let id_map = match id_map {
        Ok(m) => m,
        // nothing to number and nothing to emit
        Err(Error::EmptyVideoSet) if events.is_empty() => return Ok(Vec::new()),
        Err(e) => return Err(e.in_stage("postprocess")),
    };
    to_submission(&events, &id_map).stage("postprocess")
}

/// The full trace + scores to submission pipeline.
pub fn run_pipeline<T: BufRead, S: BufRead>(
    trace: T,
    scores: S,
    cfg: &PipelineConfig,
    video_list: Option<&[String]>,
) -> Result<Vec<SubmissionRow>> {
    let videos = segment_traces(trace, cfg, false)?;
    let ids: Vec<String> = videos.iter().map(|v| v.video_id.clone()).collect();
    let segments = videos.into_iter().flat_map(|v| v.segments).collect();
    classify_and_submit(segments, scores, cfg, ids, video_list)
}

pub fn write_segments<W: Write>(out: &mut W, segments: &[Segment]) -> Result<()> {
    for s in segments {
        serde_json::to_writer(&mut *out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_segments<R: BufRead>(input: R) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Segment = serde_json::from_str(&line).map_err(|e| Error::malformed(i + 1, e.to_string()))?;
        if !(s.start.is_finite() && s.end.is_finite() && 0.0 <= s.start && s.start < s.end) {
            return Err(Error::malformed(
                i + 1,
                format!("segment [{}, {}) is empty", s.start, s.end),
            ));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_angles<W: Write>(out: &mut W, videos: &[VideoSegments]) -> Result<()> {
    for v in videos {
        for s in v.angles.iter().flatten() {
            serde_json::to_writer(&mut *out, &AngleRecord::new(&v.video_id, s)).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads a video list: one name per line, blank lines ignored.
pub fn parse_video_list<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        let name = line.trim();
        if !name.is_empty() {
            out.push(name.to_string());
        }
    }
    Ok(out)
}
