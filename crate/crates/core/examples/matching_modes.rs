//! Greedy and exact matching on an instance where they disagree.
//!
//! ```bash
//! cargo run -p talseg --example matching_modes
//! ```

use talseg::classifier::{ActivityClass, LabeledEvent};
use talseg::scorer::{enumerate_candidates, score, MatchMode};

fn main() -> talseg::Result<()> {
    let class = ActivityClass::new(7)?;
    let ev = |s, e| LabeledEvent::new("1", class, s, e);
    let gts = vec![ev(0.0, 10.0)?, ev(2.0, 7.0)?];
    let preds = vec![ev(0.0, 5.0)?, ev(6.0, 10.0)?];

    for c in enumerate_candidates(&preds, &gts) {
        println!("candidate pred {} gt {} os {:.4}", c.prediction, c.ground_truth, c.os);
    }
    for mode in [MatchMode::Greedy, MatchMode::Optimal] {
        let r = score(&preds, &gts, mode)?;
        let pairs: Vec<_> = r.matched.iter().map(|m| (m.prediction, m.ground_truth)).collect();
        println!("{mode:?}: pairs {pairs:?} aggregate {:.4}", r.aggregate);
    }
    let r = score(&preds, &gts, MatchMode::Greedy)?;
    println!(
        "greedy total {:.4}, optimal total {:.4}, divergent {}",
        r.greedy_total,
        r.optimal_total.unwrap_or(f64::NAN),
        r.divergent
    );
    Ok(())
}
