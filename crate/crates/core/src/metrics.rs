//! Transcript scoring: turn-weighted success, SR@T, AUC-CRR and behaviour rates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, TURN_BUDGET};
use crate::world::PersonId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Wrong,
    Timeout,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub over_filter: u32,
    pub redundant_q: u32,
    pub wrong_tool: u32,
    pub premature: u32,
    #[serde(default)]
    pub malformed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub task_id: String,
    pub track: u8,
    pub agent: String,
    pub outcome: Outcome,
    pub turns_used: u32,
    pub oracle_turns: u32,
    /// Candidate count at the start and after every turn.
    pub trace: Vec<u32>,
    pub counters: Counters,
    pub predicted: Option<PersonId>,
    pub ranking: Vec<PersonId>,
    pub in_top5: bool,
    pub actions: Vec<Action>,
}

impl Transcript {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Correct
    }

    /// Turns charged to the transcript; a timeout costs the whole budget.
    pub fn charged_turns(&self) -> u32 {
        if self.outcome == Outcome::Timeout {
            TURN_BUDGET.max(self.turns_used)
        } else {
            self.turns_used
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no transcripts to score")]
    EmptyBatch,
    #[error("SR@T needs 1 <= T <= {TURN_BUDGET}, got {0}")]
    BadBudget(u32),
    #[error("bad transcript file: {0}")]
    Parse(String),
}

/// Per-task term of TWS: s * tau_star / max(tau, tau_star). Returns s when
/// both are zero.
pub fn tws_term(success: bool, oracle_turns: u32, turns: u32) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = turns.max(oracle_turns);
    if denom == 0 {
        1.0
    } else {
        oracle_turns as f64 / denom as f64
    }
}

pub fn tws(ts: &[Transcript]) -> f64 {
    if ts.is_empty() {
        return 0.0;
    }
    ts.iter()
        .map(|t| tws_term(t.success(), t.oracle_turns, t.turns_used))
        .sum::<f64>()
        / ts.len() as f64
}

/// Mean candidate reduction over the first `oracle_turns` turns. The trace
/// is padded with its last value when the session ended sooner.
pub fn auc_crr_trace(trace: &[u32], oracle_turns: u32) -> f64 {
    let Some(&c0) = trace.first() else { return 0.0 };
    if c0 == 0 || oracle_turns == 0 {
        return 0.0;
    }
    let last = *trace.last().expect("non-empty");
    (1..=oracle_turns as usize)
        .map(|t| 1.0 - trace.get(t).copied().unwrap_or(last) as f64 / c0 as f64)
        .sum::<f64>()
        / oracle_turns as f64
}

pub fn auc_crr(t: &Transcript) -> f64 {
    auc_crr_trace(&t.trace, t.oracle_turns)
}

pub fn sr_at(ts: &[Transcript], budget: u32) -> Result<f64, MetricsError> {
    if budget == 0 || budget > TURN_BUDGET {
        return Err(MetricsError::BadBudget(budget));
    }
    if ts.is_empty() {
        return Ok(0.0);
    }
    Ok(ts.iter().filter(|t| t.success() && t.turns_used <= budget).count() as f64 / ts.len() as f64)
}

/// Mean over transcripts of the per-turn reduction fraction
/// (1 - |C_T| / |C_0|) / T, counting only transcripts with at least one
/// trace step.
pub fn ssrr(ts: &[Transcript]) -> f64 {
    let vals: Vec<f64> = ts
        .iter()
        .filter(|t| t.trace.len() > 1 && t.trace[0] > 0)
        .map(|t| {
            let steps = (t.trace.len() - 1) as f64;
            (1.0 - *t.trace.last().expect("len > 1") as f64 / t.trace[0] as f64) / steps
        })
        .collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub track: u8,
    pub n: usize,
    pub tws: f64,
    pub top1: f64,
    /// Track 1 only: target within the submitted top-5 ranking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top5: Option<f64>,
    /// SR@T for T = 1..=20.
    pub sr: Vec<f64>,
    pub avg_turns_success: Option<f64>,
    pub auc_crr: f64,
    pub ssrr: f64,
    pub premature: u32,
    pub timeout_rate: f64,
    pub over_filter_rate: f64,
    pub redundant_q: u32,
    pub wrong_tool: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub agent: String,
    pub tracks: Vec<TrackReport>,
}

pub fn track_report(track: u8, ts: &[Transcript]) -> Result<TrackReport, MetricsError> {
    if ts.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let n = ts.len();
    let nf = n as f64;
    let successes: Vec<&Transcript> = ts.iter().filter(|t| t.success()).collect();
    let sr = (1..=TURN_BUDGET).map(|b| sr_at(ts, b)).collect::<Result<Vec<_>, _>>()?;
    Ok(TrackReport {
        track,
        n,
        tws: tws(ts),
        top1: successes.len() as f64 / nf,
        top5: (track == 1).then(|| ts.iter().filter(|t| t.in_top5).count() as f64 / nf),
        sr,
        avg_turns_success: (!successes.is_empty())
            .then(|| successes.iter().map(|t| t.turns_used as f64).sum::<f64>() / successes.len() as f64),
        auc_crr: ts.iter().map(auc_crr).sum::<f64>() / nf,
        ssrr: ssrr(ts),
        premature: ts.iter().map(|t| t.counters.premature).sum(),
        timeout_rate: ts.iter().filter(|t| t.outcome == Outcome::Timeout).count() as f64 / nf,
        over_filter_rate: ts.iter().filter(|t| t.counters.over_filter > 0).count() as f64 / nf,
        redundant_q: ts.iter().map(|t| t.counters.redundant_q).sum(),
        wrong_tool: ts.iter().map(|t| t.counters.wrong_tool).sum(),
    })
}

/// Per-track report. Transcripts are grouped by track and sorted by task
/// id first, so input order never matters.
pub fn aggregate(ts: &[Transcript]) -> Result<Report, MetricsError> {
    if ts.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let mut by_track: BTreeMap<u8, Vec<Transcript>> = BTreeMap::new();
    for t in ts {
        by_track.entry(t.track).or_default().push(t.clone());
    }
    let mut agents: Vec<&str> = ts.iter().map(|t| t.agent.as_str()).collect();
    agents.sort_unstable();
    agents.dedup();
    let tracks = by_track
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(|a, b| a.task_id.cmp(&b.task_id));
            track_report(k, &v)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        agent: agents.join("+"),
        tracks,
    })
}

impl Report {
    pub fn to_canonical_json(&self) -> String {
        crate::io::canonical_json(self)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "agent: {}", self.agent);
        let _ = writeln!(
            s,
            "{:<6}{:>6}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>6}{:>8}",
            "track", "n", "TWS", "Top-1", "SR@5", "AvgT", "AUC", "SSRR", "TO%", "Prem", "Top-5"
        );
        for r in &self.tracks {
            let _ = writeln!(
                s,
                "{:<6}{:>6}{:>8.3}{:>8.1}{:>8.1}{:>8}{:>8.3}{:>8.3}{:>8.1}{:>6}{:>8}",
                r.track,
                r.n,
                r.tws,
                100.0 * r.top1,
                100.0 * r.sr[4],
                r.avg_turns_success.map_or("-".to_string(), |x| format!("{x:.2}")),
                r.auc_crr,
                r.ssrr,
                100.0 * r.timeout_rate,
                r.premature,
                r.top5.map_or("-".to_string(), |x| format!("{:.1}", 100.0 * x)),
            );
        }
        s
    }
}

/// One CSV row per transcript.
pub fn to_csv(ts: &[Transcript]) -> String {
    let mut s = String::from(
        "task_id,track,agent,outcome,turns_used,oracle_turns,tws,auc_crr,in_top5,over_filter,redundant_q,wrong_tool,premature,trace\n",
    );
    let mut sorted: Vec<&Transcript> = ts.iter().collect();
    sorted.sort_by(|a, b| (&a.agent, &a.task_id).cmp(&(&b.agent, &b.task_id)));
    for t in sorted {
        let trace: Vec<String> = t.trace.iter().map(u32::to_string).collect();
        let outcome = match t.outcome {
            Outcome::Correct => "correct",
            Outcome::Wrong => "wrong",
            Outcome::Timeout => "timeout",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.task_id,
            t.track,
            t.agent,
            outcome,
            t.turns_used,
            t.oracle_turns,
            tws_term(t.success(), t.oracle_turns, t.turns_used),
            auc_crr(t),
            t.in_top5,
            t.counters.over_filter,
            t.counters.redundant_q,
            t.counters.wrong_tool,
            t.counters.premature,
            trace.join(" ")
        );
    }
    s
}

/// Transcripts as one JSON object per line.
pub fn write_transcripts(path: impl AsRef<Path>, ts: &[Transcript]) -> std::io::Result<()> {
    let mut out = String::new();
    for t in ts {
        out.push_str(&crate::protocol::compact_json(t));
        out.push('\n');
    }
    std::fs::write(path, out)
}

pub fn read_transcripts(path: impl AsRef<Path>) -> Result<Vec<Transcript>, MetricsError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| MetricsError::Parse(e.to_string()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| MetricsError::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}
