//! Render a short synthetic trace, then measure angles and cut anomaly
//! segments from it frame by frame.
//!
//! ```bash
//! cargo run -p talseg --example segment_trace
//! ```

use talseg::classifier::ActivityClass;
use talseg::kinematics::{angle_series, KinematicsConfig};
use talseg::segmenter::{classify_series, extract_segments, SegmenterConfig};
use talseg::synth::{generate, Driver, EventScript, ScriptEvent};
use talseg::trace_io::normalize_coordinates;

fn main() -> talseg::Result<()> {
    let event = |activity, start, end, driver, magnitude| ScriptEvent {
        activity: ActivityClass::new(activity).unwrap(),
        start,
        end,
        driver,
        magnitude,
    };
    let script = EventScript {
        video_id: "demo.mp4".into(),
        fps: 30.0,
        duration: 12.0,
        events: vec![
            event(6, 1.0, 3.5, Driver::Head, 55.0),
            event(4, 5.0, 6.0, Driver::LeftHand, 70.0),
            event(2, 6.2, 8.0, Driver::RightHand, 65.0),
        ],
        noise_sigma: 0.004,
        seed: 7,
        score_noise: 0.0,
        frame_size: Default::default(),
    };
    let seg_cfg = SegmenterConfig::default();
    let video = generate(&script, &seg_cfg)?;

    let (trace, clamped) = normalize_coordinates(video.trace);
    let angles = angle_series(&trace, &KinematicsConfig::default());
    for s in angles.iter().step_by(30) {
        println!(
            "t={:5.2}s head={:6.2} left={:6.2} right={:6.2}",
            s.t,
            s.head_angle.unwrap_or(f64::NAN),
            s.left_hand_angle.unwrap_or(f64::NAN),
            s.right_hand_angle.unwrap_or(f64::NAN)
        );
    }

    let labels = classify_series(&angles, &seg_cfg);
    let segments = extract_segments(&trace.video_id, &labels, trace.fps, &seg_cfg)?;
    println!("{} frames, {clamped} clamped keypoints", trace.frames.len());
    // the 0.2 s gap between the two hand events is absorbed
    for s in &segments {
        println!("segment [{:.3}, {:.3}) frames={}", s.start, s.end, s.frames);
    }
    Ok(())
}
