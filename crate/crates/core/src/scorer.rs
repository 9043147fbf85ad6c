//! Activity overlap scoring.
//!
//! A prediction may only match a ground-truth event of the same video and
//! class whose start and end both lie within [`WINDOW_SECONDS`] of its own.
//! Each pair is worth its temporal IoU
//!
//! ```text
//! os(p, g) = max(min(ge, pe) - max(gs, ps), 0) / (max(ge, pe) - min(gs, ps))
//! ```
//!
//! and the aggregate is `sum(os over matched pairs) / (|GT| + unmatched predictions)`,
//! so missed events count as zero and spurious predictions enlarge the
//! denominator.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::LabeledEvent;
use crate::error::{Error, Result};

/// Maximum allowed start and end offset between matched events, inclusive.
pub const WINDOW_SECONDS: f64 = 10.0;

/// Largest candidate component (per side) the exact matcher accepts.
pub const OPTIMAL_CAP: usize = 12;

const TOTAL_EPSILON: f64 = 1e-12;

/// Intersection over union of two half-open time intervals.
pub fn overlap_score(p: (f64, f64), g: (f64, f64)) -> Result<f64> {
    for (start, end) in [p, g] {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::DegenerateInterval { start, end });
        }
    }
    let (ps, pe) = p;
    let (gs, ge) = g;
    let inter = (ge.min(pe) - gs.max(ps)).max(0.0);
    let union = ge.max(pe) - gs.min(ps);
    Ok(inter / union)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub prediction: usize,
    pub ground_truth: usize,
    pub os: f64,
}

/// Whether `p` and `g` may be paired at all.
pub fn passes_gates(p: &LabeledEvent, g: &LabeledEvent) -> bool {
    p.video_id == g.video_id
        && p.activity == g.activity
        && (p.start - g.start).abs() <= WINDOW_SECONDS
        && (p.end - g.end).abs() <= WINDOW_SECONDS
}

/// All gated pairs, ordered by descending os, then ground-truth start, then
/// prediction start (then indices).
pub fn enumerate_candidates(preds: &[LabeledEvent], gts: &[LabeledEvent]) -> Vec<MatchCandidate> {
    let mut by_key: HashMap<(&str, u8), Vec<usize>> = HashMap::new();
    for (gi, g) in gts.iter().enumerate() {
        by_key
            .entry((g.video_id.as_str(), g.activity.id()))
            .or_default()
            .push(gi);
    }
    let mut out = Vec::new();
    for (pi, p) in preds.iter().enumerate() {
        let Some(gis) = by_key.get(&(p.video_id.as_str(), p.activity.id())) else {
            continue;
        };
        for &gi in gis {
            let g = &gts[gi];
            if passes_gates(p, g) {
                let os = overlap_score((p.start, p.end), (g.start, g.end)).expect("labeled events are nondegenerate");
                out.push(MatchCandidate {
                    prediction: pi,
                    ground_truth: gi,
                    os,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.os.total_cmp(&a.os)
            .then(gts[a.ground_truth].start.total_cmp(&gts[b.ground_truth].start))
            .then(preds[a.prediction].start.total_cmp(&preds[b.prediction].start))
            .then(a.ground_truth.cmp(&b.ground_truth))
            .then(a.prediction.cmp(&b.prediction))
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Greedy,
    Optimal,
}

impl FromStr for MatchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(MatchMode::Greedy),
            "optimal" => Ok(MatchMode::Optimal),
            other => Err(Error::Config(format!("unknown matching mode {other:?}"))),
        }
    }
}

pub fn total_os(matching: &[MatchCandidate]) -> f64 {
    matching.iter().fold(0.0, |acc, c| acc + c.os)
}

/// Accepts candidates in order whenever both endpoints are still free.
pub fn match_greedy(candidates: &[MatchCandidate]) -> Vec<MatchCandidate> {
    let mut used_p = std::collections::HashSet::new();
    let mut used_g = std::collections::HashSet::new();
    candidates
        .iter()
        .filter(|c| {
            if used_p.contains(&c.prediction) || used_g.contains(&c.ground_truth) {
                return false;
            }
            used_p.insert(c.prediction);
            used_g.insert(c.ground_truth);
            true
        })
        .copied()
        .collect()
}

/// Connected components of the candidate graph, as lists of candidate indices.
fn components(candidates: &[MatchCandidate]) -> Vec<Vec<usize>> {
    // union-find over prediction and ground-truth nodes
    let mut parent: HashMap<(bool, usize), (bool, usize)> = HashMap::new();
    fn find(parent: &mut HashMap<(bool, usize), (bool, usize)>, x: (bool, usize)) -> (bool, usize) {
        let p = *parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = find(parent, p);
        parent.insert(x, root);
        root
    }
    for c in candidates {
        let a = find(&mut parent, (true, c.prediction));
        let b = find(&mut parent, (false, c.ground_truth));
        if a != b {
            parent.insert(a, b);
        }
    }
    let mut groups: BTreeMap<(bool, usize), Vec<usize>> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        let root = find(&mut parent, (true, c.prediction));
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Exact maximum-total-os assignment within one component.
fn match_component(candidates: &[MatchCandidate], members: &[usize]) -> Result<Vec<MatchCandidate>> {
    let mut preds: Vec<usize> = members.iter().map(|&i| candidates[i].prediction).collect();
    let mut gts: Vec<usize> = members.iter().map(|&i| candidates[i].ground_truth).collect();
    preds.sort_unstable();
    preds.dedup();
    gts.sort_unstable();
    gts.dedup();
    if preds.len() > OPTIMAL_CAP || gts.len() > OPTIMAL_CAP {
        return Err(Error::MatchingTooLarge {
            predictions: preds.len(),
            ground_truths: gts.len(),
        });
    }
    // options[k]: (gt bit, candidate) for the k-th prediction
    let mut options: Vec<Vec<(usize, MatchCandidate)>> = vec![Vec::new(); preds.len()];
    for &i in members {
        let c = candidates[i];
        let k = preds.binary_search(&c.prediction).unwrap();
        let bit = gts.binary_search(&c.ground_truth).unwrap();
        options[k].push((bit, c));
    }

    let states = 1usize << gts.len();
    // best[k][mask]: best total from prediction k onward with `mask` used
    // ties on total prefer more pairs, so zero-overlap candidates still match
    let mut best = vec![vec![(0.0f64, 0usize); states]; preds.len() + 1];
    let mut choice = vec![vec![None::<usize>; states]; preds.len()];
    for k in (0..preds.len()).rev() {
        for mask in 0..states {
            let (mut value, mut pairs) = best[k + 1][mask];
            let mut pick = None;
            for (j, &(bit, c)) in options[k].iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    continue;
                }
                let (rest, rest_pairs) = best[k + 1][mask | (1 << bit)];
                let v = c.os + rest;
                if v > value || (v == value && rest_pairs + 1 > pairs) {
                    value = v;
                    pairs = rest_pairs + 1;
                    pick = Some(j);
                }
            }
            best[k][mask] = (value, pairs);
            choice[k][mask] = pick;
        }
    }
    let mut out = Vec::new();
    let mut mask = 0usize;
    for k in 0..preds.len() {
        if let Some(j) = choice[k][mask] {
            let (bit, c) = options[k][j];
            mask |= 1 << bit;
            out.push(c);
        }
    }
    Ok(out)
}

/// Maximum-total-os one-to-one assignment.
///
/// Each connected component of the candidate graph is solved exactly and
/// independently; a component with more than [`OPTIMAL_CAP`] predictions or
/// ground truths is an error.
pub fn match_optimal(candidates: &[MatchCandidate]) -> Result<Vec<MatchCandidate>> {
    let mut out = Vec::new();
    for members in components(candidates) {
        out.extend(match_component(candidates, &members)?);
    }
    Ok(out)
}

pub fn match_candidates(candidates: &[MatchCandidate], mode: MatchMode) -> Result<Vec<MatchCandidate>> {
    match mode {
        MatchMode::Greedy => Ok(match_greedy(candidates)),
        MatchMode::Optimal => match_optimal(candidates),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub prediction: usize,
    pub ground_truth: usize,
    pub video_id: String,
    pub activity: u8,
    pub os: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub ground_truths: usize,
    pub predictions: usize,
    pub matched: usize,
    pub os_sum: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mode: MatchMode,
    pub aggregate: f64,
    pub ground_truths: usize,
    pub predictions: usize,
    pub unmatched_ground_truths: usize,
    pub unmatched_predictions: usize,
    pub matched: Vec<MatchedPair>,
    pub per_class: BTreeMap<u8, ClassBreakdown>,
    pub greedy_total: f64,
    /// `None` when some candidate component exceeds the exact matcher's cap.
    pub optimal_total: Option<f64>,
    /// Greedy and exact matching reach different totals.
    pub divergent: bool,
}

fn ratio(os_sum: f64, ground_truths: usize, unmatched_predictions: usize) -> f64 {
    let denom = ground_truths + unmatched_predictions;
    if denom == 0 {
        1.0
    } else {
        os_sum / denom as f64
    }
}

pub fn score(preds: &[LabeledEvent], gts: &[LabeledEvent], mode: MatchMode) -> Result<ScoreReport> {
    let candidates = enumerate_candidates(preds, gts);
    let greedy = match_greedy(&candidates);
    let optimal = match mode {
        MatchMode::Optimal => Some(match_optimal(&candidates)?),
        MatchMode::Greedy => match_optimal(&candidates).ok(),
    };
    let greedy_total = total_os(&greedy);
    let optimal_total = optimal.as_deref().map(total_os);
    let divergent = optimal_total.is_some_and(|o| (o - greedy_total).abs() > TOTAL_EPSILON);

    let mut chosen = match mode {
        MatchMode::Greedy => greedy,
        MatchMode::Optimal => optimal.expect("computed above"),
    };
    chosen.sort_by_key(|c| (c.ground_truth, c.prediction));

    let mut per_class: BTreeMap<u8, ClassBreakdown> = BTreeMap::new();
    for g in gts {
        per_class.entry(g.activity.id()).or_default().ground_truths += 1;
    }
    for p in preds {
        per_class.entry(p.activity.id()).or_default().predictions += 1;
    }
    let matched: Vec<MatchedPair> = chosen
        .iter()
        .map(|c| {
            let g = &gts[c.ground_truth];
            let entry = per_class.entry(g.activity.id()).or_default();
            entry.matched += 1;
            entry.os_sum += c.os;
            MatchedPair {
                prediction: c.prediction,
                ground_truth: c.ground_truth,
                video_id: g.video_id.clone(),
                activity: g.activity.id(),
                os: c.os,
            }
        })
        .collect();
    for b in per_class.values_mut() {
        b.score = if b.ground_truths == 0 && b.predictions > 0 {
            0.0
        } else {
            ratio(b.os_sum, b.ground_truths, b.predictions - b.matched)
        };
    }

    let unmatched_predictions = preds.len() - matched.len();
    let unmatched_ground_truths = gts.len() - matched.len();
    let aggregate = if gts.is_empty() {
        if preds.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        ratio(total_os(&chosen), gts.len(), unmatched_predictions)
    };

    Ok(ScoreReport {
        mode,
        aggregate,
        ground_truths: gts.len(),
        predictions: preds.len(),
        unmatched_ground_truths,
        unmatched_predictions,
        matched,
        per_class,
        greedy_total,
        optimal_total,
        divergent,
    })
}
