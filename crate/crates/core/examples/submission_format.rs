//! Filter, round and number labeled events into submission rows.
//!
//! ```bash
//! cargo run -p talseg --example submission_format
//! ```

use talseg::classifier::{ActivityClass, LabeledEvent};
use talseg::postprocess::{build_id_map, filter_short, parse_submission, to_submission, write_submission};

fn main() -> talseg::Result<()> {
    let ev = |v: &str, c, s, e| LabeledEvent::new(v, ActivityClass::new(c).unwrap(), s, e).unwrap();
    let events = vec![
        ev("dashboard_b.mp4", 5, 125.4, 140.2),
        ev("dashboard_a.mp4", 11, 10.49, 11.5),
        ev("dashboard_a.mp4", 2, 30.0, 30.6),
        ev("rear_c.mp4", 9, 3.0, 4.0),
    ];
    let kept = filter_short(events, 1.0);
    let ids = build_id_map(["dashboard_a.mp4", "dashboard_b.mp4", "rear_c.mp4"])?;
    let rows = to_submission(&kept, &ids)?;

    let mut text = Vec::new();
    write_submission(&mut text, &rows)?;
    print!("{}", String::from_utf8_lossy(&text));
    assert_eq!(parse_submission(&text[..])?, rows);
    Ok(())
}
