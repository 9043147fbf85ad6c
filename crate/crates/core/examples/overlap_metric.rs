//! The overlap score between a predicted and a ground-truth interval.
//!
//! ```bash
//! cargo run -p talseg --example overlap_metric -- 5 15 10 20
//! ```

use talseg::scorer::overlap_score;

fn main() -> talseg::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("interval endpoint"))
        .collect();
    let pairs = match args[..] {
        [ps, pe, gs, ge] => vec![((ps, pe), (gs, ge))],
        _ => vec![
            ((10.0, 20.0), (10.0, 20.0)),
            ((5.0, 15.0), (10.0, 20.0)),
            ((12.0, 14.0), (10.0, 20.0)),
            ((0.0, 5.0), (10.0, 20.0)),
        ],
    };
    for (p, g) in pairs {
        println!("pred {p:?} vs gt {g:?}: os = {:.4}", overlap_score(p, g)?);
    }
    Ok(())
}
