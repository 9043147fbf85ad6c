use std::collections::BTreeMap;

use proptest::prelude::*;

use talseg::classifier::{label_segment, ActivityClass, FrameScores, LabeledEvent, Labeling, NUM_SCORES};
use talseg::kinematics::{head_angle, AngleSample};
use talseg::postprocess::{build_id_map, filter_short, to_submission};
use talseg::scorer::{score, MatchMode};
use talseg::segmenter::{classify_series, extract_segments, Activity, Segment, SegmenterConfig};
use talseg::trace_io::{normalize_coordinates, parse_traces, write_trace, Joint, Keypoint, KeypointFrame, VideoTrace};

// ---------------------------------------------------------------------------
// trace_io
// ---------------------------------------------------------------------------

fn keypoints() -> impl Strategy<Value = BTreeMap<String, Keypoint>> {
    let joint = prop::sample::select(Joint::REQUIRED.to_vec());
    prop::collection::btree_map(
        joint.prop_map(|j| j.name().to_string()),
        (-100.0..1400.0f64, -100.0..800.0f64, 0.0..1.0f64).prop_map(|(x, y, c)| Keypoint::new(x, y, c)),
        0..9,
    )
}

fn trace() -> impl Strategy<Value = VideoTrace> {
    (prop::collection::vec((1u64..5, keypoints()), 0..30), prop::bool::ANY).prop_map(|(steps, normalized)| {
        let mut trace = VideoTrace::new("clip.mp4", 30.0);
        let mut frame = 0;
        for (step, keypoints) in steps {
            frame += step;
            let keypoints = if normalized {
                keypoints
                    .into_iter()
                    .map(|(n, k)| (n, Keypoint::new(k.x / 1280.0, k.y / 720.0, k.conf)))
                    .collect()
            } else {
                keypoints
            };
            trace.frames.push(KeypointFrame {
                video_id: trace.video_id.clone(),
                frame,
                t: frame as f64 / 30.0,
                width: 1280,
                height: 720,
                normalized,
                keypoints,
            });
        }
        trace
    })
}

proptest! {
    #[test]
    fn normalize_is_idempotent_and_in_range(t in trace()) {
        let (once, _) = normalize_coordinates(t);
        for f in &once.frames {
            prop_assert!(f.normalized);
            for k in f.keypoints.values() {
                prop_assert!((0.0..=1.0).contains(&k.x) && (0.0..=1.0).contains(&k.y));
            }
        }
        let (twice, clamped) = normalize_coordinates(once.clone());
        prop_assert_eq!(clamped, 0);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn serialize_parse_round_trip(t in trace()) {
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        let parsed = parse_traces(&buf[..], 30.0).unwrap();
        if t.frames.is_empty() {
            prop_assert!(parsed.is_empty());
        } else {
            prop_assert_eq!(parsed.len(), 1);
            let p = &parsed[0];
            prop_assert!(p.frames.windows(2).all(|w| w[0].t <= w[1].t));
            prop_assert_eq!(p, &t);
        }
    }
}

// ---------------------------------------------------------------------------
// kinematics
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn head_angle_grows_with_lateral_offset(
        drop in 0.01..0.3f64,
        a in 0.0..0.5f64,
        b in 0.0..0.5f64,
        aspect in 0.5..2.5f64,
    ) {
        let kp = |x, y| Keypoint::new(x, y, 1.0);
        let (le, re) = (kp(0.4, 0.3), kp(0.6, 0.3));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let h_lo = head_angle(le, re, kp(0.5 + lo, 0.3 + drop), aspect, 0.5).unwrap();
        let h_hi = head_angle(le, re, kp(0.5 + hi, 0.3 + drop), aspect, 0.5).unwrap();
        prop_assert!(h_lo <= h_hi);
        // left and right offsets are indistinguishable
        let mirrored = head_angle(le, re, kp(0.5 - hi, 0.3 + drop), aspect, 0.5).unwrap();
        prop_assert!((h_hi - mirrored).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------------------
// segmenter
// ---------------------------------------------------------------------------

fn angle_samples() -> impl Strategy<Value = Vec<AngleSample>> {
    let angle = |hi: f64| prop::option::weighted(0.8, 0.0..hi);
    prop::collection::vec((angle(180.0), angle(90.0), angle(90.0)), 0..300).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (h, l, r))| AngleSample {
                frame: i as u64,
                t: i as f64 / 30.0,
                head_angle: h,
                left_hand_angle: l,
                right_hand_angle: r.map(|r| r - 45.0),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn raising_thresholds_shrinks_anomaly_set(
        samples in angle_samples(),
        head in 0.0..90.0f64,
        hand in 0.0..60.0f64,
        bump in 0.0..30.0f64,
        carry in prop::bool::ANY,
    ) {
        let low = SegmenterConfig { theta_head: head, theta_hand: hand, carry_forward: carry, ..SegmenterConfig::default() };
        let high = SegmenterConfig { theta_head: head + bump, theta_hand: hand + bump, ..low };
        let a = classify_series(&samples, &low);
        let b = classify_series(&samples, &high);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y.label != Activity::Anomaly || x.label == Activity::Anomaly);
        }
    }

    #[test]
    fn every_anomaly_frame_is_covered_once(samples in angle_samples(), gap in 0.0..2.0f64) {
        let cfg = SegmenterConfig { gap_tolerance: gap, ..SegmenterConfig::default() };
        let labels = classify_series(&samples, &cfg);
        let segs = extract_segments("v", &labels, 30.0, &cfg).unwrap();
        for l in labels.iter().filter(|l| l.label == Activity::Anomaly) {
            prop_assert_eq!(segs.iter().filter(|s| s.start <= l.t && l.t < s.end).count(), 1);
        }
        for w in segs.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
    }
}

// ---------------------------------------------------------------------------
// classifier
// ---------------------------------------------------------------------------

fn segment() -> Segment {
    Segment {
        video_id: "v".into(),
        start: 0.0,
        end: 100.0 / 30.0,
        frames: 100,
    }
}

fn label_of(scores: &[FrameScores]) -> u8 {
    match label_segment(&segment(), scores, 30.0).unwrap() {
        Labeling::Labeled(e) => e.activity.id(),
        Labeling::Unclassified(_) => 0,
    }
}

// small integers keep every sum exact, so ties stay ties under any transform
fn integer_scores() -> impl Strategy<Value = Vec<FrameScores>> {
    prop::collection::vec(prop::array::uniform16(0u8..6), 1..40).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, r)| FrameScores {
                video_id: "v".into(),
                frame: i as u64,
                scores: r.map(f64::from),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn label_is_affine_invariant(
        scores in integer_scores(),
        scale in prop::sample::select(vec![0.5, 2.0, 4.0]),
        shift in prop::sample::select(vec![-3.0, 0.0, 5.0]),
    ) {
        let moved: Vec<_> = scores
            .iter()
            .map(|f| FrameScores { scores: f.scores.map(|s| scale * s + shift), ..f.clone() })
            .collect();
        prop_assert_eq!(label_of(&scores), label_of(&moved));
    }

    #[test]
    fn label_ignores_frame_order(scores in integer_scores(), seed in any::<u64>()) {
        let mut shuffled = scores.clone();
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(label_of(&scores), label_of(&shuffled));
    }

    #[test]
    fn one_hot_scores_are_a_majority_vote(votes in prop::collection::vec(0usize..NUM_SCORES, 1..60)) {
        let frames: Vec<_> = votes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut s = [0.0; NUM_SCORES];
                s[c] = 1.0;
                FrameScores { video_id: "v".into(), frame: i as u64, scores: s }
            })
            .collect();
        let mut counts = [0usize; NUM_SCORES];
        for &c in &votes {
            counts[c] += 1;
        }
        // ignores normal driving; first maximum wins
        let mut best = 1;
        for c in 2..NUM_SCORES {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        prop_assert_eq!(usize::from(label_of(&frames)), best);
    }
}

// ---------------------------------------------------------------------------
// postprocess
// ---------------------------------------------------------------------------

fn events() -> impl Strategy<Value = Vec<LabeledEvent>> {
    prop::collection::vec((0usize..3, 1i64..16, 0.0..200.0f64, 0.01..20.0f64), 0..30).prop_map(|v| {
        v.into_iter()
            .map(|(video, class, start, len)| {
                LabeledEvent::new(
                    format!("video_{video}"),
                    ActivityClass::new(class).unwrap(),
                    start,
                    start + len,
                )
                .unwrap()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn filter_short_is_idempotent_and_monotone(evs in events(), a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let once = filter_short(evs.clone(), a);
        prop_assert_eq!(filter_short(once.clone(), a), once.clone());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let strict = filter_short(evs.clone(), hi);
        let loose = filter_short(evs, lo);
        prop_assert!(strict.iter().all(|e| loose.contains(e)));
    }

    #[test]
    fn submission_rows_are_nonempty_and_sorted(evs in events()) {
        let ids = build_id_map(["video_0", "video_1", "video_2"]).unwrap();
        let rows = to_submission(&evs, &ids).unwrap();
        for r in &rows {
            prop_assert!(r.end > r.start);
        }
        for w in rows.windows(2) {
            prop_assert!((w[0].video, w[0].start, w[0].activity, w[0].end) <= (w[1].video, w[1].start, w[1].activity, w[1].end));
        }
    }
}

// ---------------------------------------------------------------------------
// scorer
// ---------------------------------------------------------------------------

fn scored_events() -> impl Strategy<Value = Vec<LabeledEvent>> {
    prop::collection::vec((0usize..2, 1i64..4, 0u32..60, 1u32..20), 0..10).prop_map(|v| {
        v.into_iter()
            .map(|(video, class, start, len)| {
                let start = f64::from(start);
                LabeledEvent::new(
                    format!("{video}"),
                    ActivityClass::new(class).unwrap(),
                    start,
                    start + f64::from(len),
                )
                .unwrap()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn dropping_an_unmatched_prediction_never_hurts(preds in scored_events(), gts in scored_events()) {
        for mode in [MatchMode::Greedy, MatchMode::Optimal] {
            let report = score(&preds, &gts, mode).unwrap();
            let matched: Vec<usize> = report.matched.iter().map(|m| m.prediction).collect();
            if let Some(i) = (0..preds.len()).find(|i| !matched.contains(i)) {
                let mut fewer = preds.clone();
                fewer.remove(i);
                let after = score(&fewer, &gts, mode).unwrap();
                prop_assert!(after.aggregate + 1e-12 >= report.aggregate,
                    "{:?}: {} -> {}", mode, report.aggregate, after.aggregate);
            }
        }
    }

    #[test]
    fn perfect_predictions_score_one(gts in scored_events()) {
        for mode in [MatchMode::Greedy, MatchMode::Optimal] {
            let report = score(&gts, &gts, mode).unwrap();
            prop_assert_eq!(report.aggregate, 1.0);
            prop_assert_eq!(report.matched.len(), gts.len());
        }
    }
}
