use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::{percentile_sorted, sorted_copy};
use super::transitions::{TransitionKey, TransitionRecord};
use crate::topology::{pair_key, PairSet};

pub const EPSILON_S: f64 = 0.1;
pub const TAU_GAP_S: f64 = 0.3;
pub const TAU_DUR_S: f64 = 0.5;
pub const SOFT_THRESHOLD_CAP_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Trust,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Reason {
    ManualError,
    Simultaneous,
    Overlap,
    SoftAdjNeg,
    BeyondAdj,
    ResidualNeg,
    TinyGap,
    ShortSeq,
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTransition {
    pub record: TransitionRecord,
    pub status: Status,
    pub reason: Reason,
}

/// Curated inputs and topology facts the labeler consults.
#[derive(Debug, Clone, Default)]
pub struct LabelContext {
    pub manual_errors: BTreeSet<TransitionKey>,
    pub simultaneous: BTreeSet<TransitionKey>,
    pub overlap_pairs: PairSet,
    pub soft_pairs: PairSet,
    /// Acceptance threshold per unordered soft pair.
    pub thresholds: BTreeMap<(String, String), f64>,
}

/// θ per soft pair: P95 of the negative-transit magnitudes, capped at 2 s;
/// 0 when the pair never shows a negative transit.
pub fn compute_soft_adj_thresholds(
    transitions: &[TransitionRecord],
    soft_pairs: &PairSet,
) -> BTreeMap<(String, String), f64> {
    let mut neg: BTreeMap<(String, String), Vec<f64>> =
        soft_pairs.iter().map(|p| (p.clone(), Vec::new())).collect();
    for t in transitions {
        if t.transit < 0.0 {
            if let Some(v) = neg.get_mut(&pair_key(&t.from_cam, &t.to_cam)) {
                v.push(-t.transit);
            }
        }
    }
    neg.into_iter()
        .map(|(k, v)| {
            let theta = if v.is_empty() {
                0.0
            } else {
                percentile_sorted(&sorted_copy(&v), 95.0).min(SOFT_THRESHOLD_CAP_S)
            };
            (k, theta)
        })
        .collect()
}

/// First matching rule wins, in the fixed priority order.
pub fn label_transition(t: &TransitionRecord, ctx: &LabelContext) -> (Status, Reason) {
    let key = t.key();
    if ctx.manual_errors.contains(&key) {
        return (Status::Fail, Reason::ManualError);
    }
    if ctx.simultaneous.contains(&key) {
        return (Status::Fail, Reason::Simultaneous);
    }
    let edge = pair_key(&t.from_cam, &t.to_cam);
    if !t.is_self_loop() && ctx.overlap_pairs.contains(&edge) {
        return (Status::Trust, Reason::Overlap);
    }
    if !t.is_self_loop() && ctx.soft_pairs.contains(&edge) {
        let theta = ctx.thresholds.get(&edge).copied().unwrap_or(0.0);
        if t.transit < -EPSILON_S {
            return if t.transit.abs() <= theta {
                (Status::Warn, Reason::SoftAdjNeg)
            } else {
                (Status::Fail, Reason::BeyondAdj)
            };
        }
    }
    if t.transit < -EPSILON_S {
        return (Status::Fail, Reason::ResidualNeg);
    }
    if 0.0 <= t.transit && t.transit < TAU_GAP_S {
        return (Status::Warn, Reason::TinyGap);
    }
    if t.duration_prev <= TAU_DUR_S {
        return (Status::Warn, Reason::ShortSeq);
    }
    (Status::Trust, Reason::Default)
}

pub fn label_all(transitions: &[TransitionRecord], ctx: &LabelContext) -> Vec<LabeledTransition> {
    transitions
        .iter()
        .map(|t| {
            let (status, reason) = label_transition(t, ctx);
            LabeledTransition {
                record: t.clone(),
                status,
                reason,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(from: &str, to: &str, transit: f64, dur: f64) -> TransitionRecord {
        TransitionRecord {
            person: 1,
            seq: 0,
            from_cam: from.into(),
            to_cam: to.into(),
            exit_time: 100.0,
            enter_time: 100.0 + transit,
            transit,
            duration_prev: dur,
        }
    }

    fn ctx() -> LabelContext {
        let mut c = LabelContext::default();
        c.overlap_pairs.insert(pair_key("c01", "c02"));
        c.soft_pairs.insert(pair_key("c04", "c07"));
        c.thresholds.insert(pair_key("c04", "c07"), 1.0);
        c
    }

    #[test]
    fn manual_error_wins() {
        let mut c = ctx();
        c.manual_errors.insert((1, 0));
        c.simultaneous.insert((1, 0));
        assert_eq!(
            label_transition(&rec("c01", "c02", -1.5, 3.0), &c),
            (Status::Fail, Reason::ManualError)
        );
    }

    #[test]
    fn overlap_precedes_negative_checks() {
        assert_eq!(
            label_transition(&rec("c02", "c01", -1.5, 3.0), &ctx()),
            (Status::Trust, Reason::Overlap)
        );
    }

    #[test]
    fn soft_negative_within_and_beyond() {
        let c = ctx();
        assert_eq!(label_transition(&rec("c07", "c04", -0.8, 3.0), &c).1, Reason::SoftAdjNeg);
        assert_eq!(label_transition(&rec("c07", "c04", -1.2, 3.0), &c).1, Reason::BeyondAdj);
        assert_eq!(label_transition(&rec("c07", "c04", 2.0, 3.0), &c).1, Reason::Default);
    }

    #[test]
    fn tail_rules() {
        let c = ctx();
        assert_eq!(label_transition(&rec("c03", "c10", -0.5, 3.0), &c).1, Reason::ResidualNeg);
        assert_eq!(
            label_transition(&rec("c03", "c10", 0.2, 3.0), &c),
            (Status::Warn, Reason::TinyGap)
        );
        assert_eq!(label_transition(&rec("c03", "c10", 5.0, 0.5), &c).1, Reason::ShortSeq);
        // -0.05 is inside epsilon but below zero: neither ResidualNeg nor TinyGap.
        assert_eq!(label_transition(&rec("c03", "c10", -0.05, 3.0), &c).1, Reason::Default);
    }

    #[test]
    fn thresholds() {
        let soft: PairSet = [pair_key("c04", "c07"), pair_key("c13", "c14")].into();
        let mut ts: Vec<TransitionRecord> = (1..=10)
            .map(|i| rec("c04", "c07", -(i as f64) / 10.0, 3.0))
            .collect();
        ts.push(rec("c13", "c14", 1.0, 3.0));
        let th = compute_soft_adj_thresholds(&ts, &soft);
        assert!((th[&pair_key("c04", "c07")] - 0.955).abs() < 1e-12);
        assert_eq!(th[&pair_key("c13", "c14")], 0.0);
        let far: Vec<TransitionRecord> = (0..5).map(|i| rec("c07", "c04", -3.0 - i as f64, 3.0)).collect();
        assert_eq!(compute_soft_adj_thresholds(&far, &soft)[&pair_key("c04", "c07")], 2.0);
    }
}
