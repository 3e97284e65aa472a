//! Independent reference implementations shared by the integration tests.
//! Nothing here calls the library code it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::OnceLock;

use camsearch::metrics::{Counters, Outcome, Transcript};
use camsearch::sttg::{build_sttg, BuildConfig, EdgeStats, ImpossibleReason, Sttg, Verdict};
use camsearch::synth::{generate_world, WorldGenConfig};
use camsearch::taskgen::{gen_track, GenConfig, StepKind, Task, TaskSet};
use camsearch::world::{PersonId, Trajectory, World};
use camsearch::Topology;

pub const FRAME_GAP_S: f64 = 4.3;

pub fn crate_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Straight transcription of the four-stage check: presence, ordering,
/// edge lookup, bounds. Pair choice: smallest |delta - gap|, first minimum
/// in (c1 visit, c2 visit) order.
pub fn reference_verdict(cand: &Trajectory, c1: &str, c2: &str, gap: f64, edges: &[EdgeStats], margin: f64) -> Verdict {
    let firsts: Vec<_> = cand.visits.iter().filter(|v| v.camera == c1).collect();
    let seconds: Vec<_> = cand.visits.iter().filter(|v| v.camera == c2).collect();
    if firsts.is_empty() || seconds.is_empty() {
        return Verdict::Impossible(ImpossibleReason::NotPresent);
    }
    let mut delta = f64::NAN;
    let mut best = f64::INFINITY;
    for a in &firsts {
        for b in &seconds {
            let d = b.enter - a.exit;
            if (d - gap).abs() < best {
                best = (d - gap).abs();
                delta = d;
            }
        }
    }
    if delta < -5.0 {
        return Verdict::Impossible(ImpossibleReason::TimeReversal);
    }
    let Some(e) = edges.iter().find(|e| e.from == c1 && e.to == c2) else {
        return Verdict::Unknown;
    };
    if delta > 0.0 && delta < e.t_min / margin {
        return Verdict::Impossible(ImpossibleReason::TooFast);
    }
    if delta > e.t_max * margin {
        return Verdict::Impossible(ImpossibleReason::TooSlow);
    }
    Verdict::Feasible
}

/// Connected components by breadth-first search over an adjacency list.
pub fn bfs_components(cams: &[String], pairs: &BTreeSet<(String, String)>) -> BTreeSet<BTreeSet<String>> {
    let mut adj: BTreeMap<&str, Vec<&str>> = cams.iter().map(|c| (c.as_str(), Vec::new())).collect();
    for (a, b) in pairs {
        if adj.contains_key(a.as_str()) && adj.contains_key(b.as_str()) {
            adj.get_mut(a.as_str()).unwrap().push(b);
            adj.get_mut(b.as_str()).unwrap().push(a);
        }
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut out = BTreeSet::new();
    for start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut q = VecDeque::from([*start]);
        while let Some(c) = q.pop_front() {
            comp.insert(c.to_string());
            for n in &adj[c] {
                if seen.insert(n) {
                    q.push_back(n);
                }
            }
        }
        out.insert(comp);
    }
    out
}

pub fn brute_auc(trace: &[u32], tau: u32) -> f64 {
    if tau == 0 || trace.is_empty() || trace[0] == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for t in 1..=tau as usize {
        let c = if t < trace.len() { trace[t] } else { trace[trace.len() - 1] };
        sum += 1.0 - c as f64 / trace[0] as f64;
    }
    sum / tau as f64
}

pub fn transcript(task_id: &str, track: u8, outcome: Outcome, turns: u32, oracle: u32, trace: Vec<u32>) -> Transcript {
    Transcript {
        task_id: task_id.to_string(),
        track,
        agent: "test".to_string(),
        outcome,
        turns_used: turns,
        oracle_turns: oracle,
        trace,
        counters: Counters::default(),
        predicted: None,
        ranking: Vec::new(),
        in_top5: outcome == Outcome::Correct,
        actions: Vec::new(),
    }
}

pub struct Batch {
    pub world: World,
    pub sttg: Sttg,
    pub set: TaskSet,
}

/// Factory world of 1000 people, seed 1, every task of every track.
pub fn standard_batch() -> &'static Batch {
    static B: OnceLock<Batch> = OnceLock::new();
    B.get_or_init(|| {
        let world = generate_world(&WorldGenConfig::new("factory", 1000, 1)).expect("world");
        let (sttg, _) = build_sttg(&world, &Topology::factory(), &BuildConfig::default()).expect("graph");
        let cfg = GenConfig::default();
        let mut tasks = Vec::new();
        for track in 1..=3 {
            tasks.extend(gen_track(&world, &sttg, track, &cfg).expect("tasks"));
        }
        let set = TaskSet::new(&world, Some(&sttg), cfg.seed, tasks);
        Batch { world, sttg, set }
    })
}

pub fn merged_trajectories(world: &World) -> BTreeMap<PersonId, Trajectory> {
    world
        .trajectories
        .iter()
        .map(|t| {
            let mut visits: Vec<camsearch::world::Visit> = Vec::new();
            for v in &t.visits {
                match visits.last_mut() {
                    Some(last) if last.camera == v.camera && v.enter - last.exit <= FRAME_GAP_S => {
                        last.exit = last.exit.max(v.exit)
                    }
                    _ => visits.push(v.clone()),
                }
            }
            (t.person, Trajectory { person: t.person, visits })
        })
        .collect()
}

/// Replays a task from the world data rather than from the recorded
/// eliminations. Returns an error string on the first inconsistency.
pub fn replay(
    task: &Task,
    world: &World,
    sttg: &Sttg,
    merged: &BTreeMap<PersonId, Trajectory>,
    margin: f64,
) -> Result<BTreeSet<PersonId>, String> {
    let rec = |id: PersonId| world.gallery.iter().find(|p| p.id == id);
    let target = rec(task.target).ok_or("target missing")?;
    if target.attrs.get(&task.clue.attribute) != Some(&task.clue.value) {
        return Err("clue does not describe the target".into());
    }
    let mut c: BTreeSet<PersonId> = task.initial_candidates.iter().copied().collect();
    for &id in &c {
        let p = rec(id).ok_or("candidate missing")?;
        if p.attrs.get(&task.clue.attribute) != Some(&task.clue.value) {
            return Err(format!("candidate {id} does not match the clue"));
        }
    }
    for s in &task.oracle_path {
        match s.kind {
            StepKind::Attribute => {
                let attr = s.attribute.as_deref().ok_or("attribute step without attribute")?;
                let value = s.value.as_ref().ok_or("attribute step without value")?;
                if target.attrs.get(attr) != Some(value) {
                    return Err(format!("step value for {attr} is not the target's"));
                }
                c.retain(|&id| rec(id).and_then(|p| p.attrs.get(attr)) == Some(value));
            }
            StepKind::Spatial => {
                let info = task.track2.as_ref().ok_or("spatial step outside track 2")?;
                let cams = s.cameras.as_ref().ok_or("spatial step without cameras")?;
                c.retain(|id| info.sightings.get(id).is_some_and(|cam| cams.contains(cam)));
            }
            StepKind::Temporal => {
                let info = task.track3.as_ref().ok_or("temporal step outside track 3")?;
                let empty = Trajectory { person: 0, visits: Vec::new() };
                c.retain(|id| {
                    let t = merged.get(id).unwrap_or(&empty);
                    reference_verdict(t, &info.c1, &info.c2, info.t2 - info.t1, &sttg.edges, margin) == Verdict::Feasible
                });
            }
        }
        if c.len() as u32 != s.candidates_after {
            return Err(format!("step count {} != recorded {}", c.len(), s.candidates_after));
        }
    }
    Ok(c)
}
