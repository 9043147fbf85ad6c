//! Write a synthetic bundle (trace, scores, ground truth) to a directory.
//!
//! ```bash
//! cargo run -p talseg --example synth_bundle -- /tmp/bundle [videos] [seed]
//! ```

use std::path::PathBuf;

use talseg::segmenter::SegmenterConfig;
use talseg::synth::{catalog_script, generate_bundle};

fn main() -> talseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(args.first().map_or("synth_bundle", String::as_str));
    let videos: usize = args.get(1).map_or(2, |a| a.parse().expect("video count"));
    let seed: u64 = args.get(2).map_or(1, |a| a.parse().expect("seed"));

    let script = catalog_script(videos, 30.0, 0.005, seed);
    let bundle = generate_bundle(&script, &SegmenterConfig::default())?;
    bundle.write_to_dir(&dir)?;
    std::fs::write(dir.join("script.json"), serde_json::to_string_pretty(&script).unwrap())?;
    println!(
        "{}: {} trace bytes, {} score bytes, {} ground-truth rows",
        dir.display(),
        bundle.trace.len(),
        bundle.scores.len(),
        bundle.ground_truth.iter().filter(|&&b| b == b'\n').count()
    );
    Ok(())
}
