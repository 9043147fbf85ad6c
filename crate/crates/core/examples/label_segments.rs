//! Assign an activity class to segments from per-frame score vectors.
//!
//! ```bash
//! cargo run -p talseg --example label_segments
//! ```

use talseg::classifier::{FrameScores, Labeling, SegmentLabeler, NUM_SCORES};
use talseg::segmenter::Segment;

fn main() -> talseg::Result<()> {
    let fps = 30.0;
    let segments = vec![
        Segment {
            video_id: "v.mp4".into(),
            start: 1.0,
            end: 2.0,
            frames: 30,
        },
        Segment {
            video_id: "v.mp4".into(),
            start: 5.0,
            end: 6.0,
            frames: 30,
        },
    ];
    let mut labeler = SegmentLabeler::new(segments, fps)?;
    for frame in 0..240u64 {
        let mut scores = [0.01; NUM_SCORES];
        // class 3 dominates early, class 8 later; class 0 never wins
        scores[0] = 0.9;
        if frame < 120 {
            scores[3] = 0.5;
        } else {
            scores[8] = 0.4;
            scores[12] = 0.35;
        }
        labeler.add(&FrameScores {
            video_id: "v.mp4".into(),
            frame,
            scores,
        });
    }
    for outcome in labeler.finish() {
        match outcome {
            Labeling::Labeled(e) => println!("[{}, {}) -> {}", e.start, e.end, e.activity),
            Labeling::Unclassified(s) => println!("[{}, {}) -> no scores", s.start, s.end),
        }
    }
    Ok(())
}
