//! Synthesize a multi-video bundle, run the full pipeline on it and score
//! the result against the script's ground truth.
//!
//! ```bash
//! cargo run --release -p talseg --example closed_loop -- [videos] [sigma] [seed]
//! ```

use talseg::config::PipelineConfig;
use talseg::pipeline::run_pipeline;
use talseg::postprocess::{parse_submission, SubmissionRow};
use talseg::scorer::score;
use talseg::synth::{catalog_script, generate_bundle};

fn main() -> talseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let videos: usize = args.first().map_or(10, |a| a.parse().expect("video count"));
    let sigma: f64 = args.get(1).map_or(0.0, |a| a.parse().expect("noise sigma"));
    let seed: u64 = args.get(2).map_or(1, |a| a.parse().expect("seed"));

    let cfg = PipelineConfig::default();
    let script = catalog_script(videos, cfg.fps, sigma, seed);
    let bundle = generate_bundle(&script, &cfg.segmenter())?;

    let rows = run_pipeline(&bundle.trace[..], &bundle.scores[..], &cfg, None)?;
    let gts = parse_submission(&bundle.ground_truth[..])?;

    let preds: Vec<_> = rows.iter().map(SubmissionRow::to_event).collect();
    let gts: Vec<_> = gts.iter().map(SubmissionRow::to_event).collect();
    let report = score(&preds, &gts, cfg.matching)?;

    println!(
        "videos={videos} sigma={sigma} seed={seed} predictions={} ground_truths={} matched={} aggregate={:.4}",
        report.predictions,
        report.ground_truths,
        report.matched.len(),
        report.aggregate
    );
    for (class, b) in &report.per_class {
        println!(
            "  class {class:>2}: gt={} pred={} score={:.3}",
            b.ground_truths, b.predictions, b.score
        );
    }
    Ok(())
}
