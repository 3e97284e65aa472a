use serde::{Deserialize, Serialize};

use super::{EdgeStats, Sttg};
use crate::world::Trajectory;

pub const DEFAULT_MARGIN: f64 = 2.0;
/// Gaps below this are physically impossible orderings.
pub const TIME_REVERSAL_S: f64 = -5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImpossibleReason {
    NotPresent,
    TimeReversal,
    TooFast,
    TooSlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Feasible,
    Impossible(ImpossibleReason),
    Unknown,
}

impl Verdict {
    /// TIME_REVERSAL or TOO_SLOW or TOO_FAST: eliminated by timing, not absence.
    pub fn is_temporal_elimination(&self) -> bool {
        matches!(
            self,
            Verdict::Impossible(
                ImpossibleReason::TimeReversal | ImpossibleReason::TooSlow | ImpossibleReason::TooFast
            )
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Gap of the chosen visit pair, absent when the candidate is not present.
    pub delta: Option<f64>,
}

/// Stages two to four, given the candidate's gap and the direct edge range.
pub fn verdict_from_gap(delta: f64, edge: Option<(f64, f64)>, margin: f64) -> Verdict {
    if delta < TIME_REVERSAL_S {
        return Verdict::Impossible(ImpossibleReason::TimeReversal);
    }
    let Some((t_min, t_max)) = edge else {
        return Verdict::Unknown;
    };
    if 0.0 < delta && delta < t_min / margin {
        Verdict::Impossible(ImpossibleReason::TooFast)
    } else if delta > t_max * margin {
        Verdict::Impossible(ImpossibleReason::TooSlow)
    } else {
        Verdict::Feasible
    }
}

/// Candidate gap for the sighting pair: among all (c1 visit, c2 visit)
/// combinations, the one whose gap is closest to `target_gap`; ties go to
/// the earliest c1 visit, then the earliest c2 visit.
pub fn candidate_gap(cand: &Trajectory, c1: &str, c2: &str, target_gap: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for a in cand.visits.iter().filter(|v| v.camera == c1) {
        for b in cand.visits.iter().filter(|v| v.camera == c2) {
            let delta = b.enter - a.exit;
            let dist = (delta - target_gap).abs();
            if best.map_or(true, |(d, _)| dist < d) {
                best = Some((dist, delta));
            }
        }
    }
    best.map(|(_, d)| d)
}

pub fn edge_range(e: &EdgeStats) -> (f64, f64) {
    (e.t_min, e.t_max)
}

pub fn classify_feasibility(
    cand: &Trajectory,
    c1: &str,
    c2: &str,
    target_gap: f64,
    sttg: &Sttg,
    margin: f64,
) -> Classification {
    let Some(delta) = candidate_gap(cand, c1, c2, target_gap) else {
        return Classification {
            verdict: Verdict::Impossible(ImpossibleReason::NotPresent),
            delta: None,
        };
    };
    let edge = sttg.edge(c1, c2).map(edge_range);
    Classification {
        verdict: verdict_from_gap(delta, edge, margin),
        delta: Some(delta),
    }
}
