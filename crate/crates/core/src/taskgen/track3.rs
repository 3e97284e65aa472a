use std::collections::BTreeMap;

use rayon::prelude::*;

use super::clue::POOL_GATE;
use super::difficulty::track3_difficulty;
use super::render::{clue_sentence, render_dialogue, vaguify_time};
use super::{
    clue_mode, compute_saliency, select_clue, simulate_ig_path, Clue, DisambiguationStep, GenConfig, SaliencyTable,
    StepKind, Task, Track3Info,
};
use crate::sttg::feasibility::classify_feasibility;
use crate::sttg::transitions::DEFAULT_FRAME_GAP_S;
use crate::sttg::{EdgeType, Sttg, Verdict};
use crate::world::{PersonId, PersonRecord, Trajectory, Visit, World};

/// Sighting pair chosen for a target: exit from the first camera, entry
/// into the second.
#[derive(Debug, Clone, PartialEq)]
pub struct SightingPair {
    pub c1: String,
    pub c2: String,
    pub t1: f64,
    pub t2: f64,
    pub score: u32,
}

/// Best consecutive visit pair over a TRAVEL or SOFT_ADJ edge with enough
/// samples and a positive gap. Earliest pair wins ties.
pub fn choose_pair(traj: &Trajectory, sttg: &Sttg, cfg: &GenConfig) -> Option<SightingPair> {
    let mut best: Option<SightingPair> = None;
    for w in traj.visits.windows(2) {
        let (a, b): (&Visit, &Visit) = (&w[0], &w[1]);
        if a.camera == b.camera {
            continue;
        }
        let Some(e) = sttg.edge(&a.camera, &b.camera) else { continue };
        let delta = b.enter - a.exit;
        if e.n < cfg.min_edge_count || delta <= 0.0 {
            continue;
        }
        let mut score = match e.edge_type {
            EdgeType::Travel => 10,
            EdgeType::SoftAdj => 3,
            EdgeType::Overlap => continue,
        };
        if (10.0..=60.0).contains(&e.t_med) {
            score += 5;
        }
        if e.n >= cfg.high_n {
            score += 4;
        }
        if e.t_min <= delta && delta <= e.t_max {
            score += 3;
        }
        if best.as_ref().is_none_or(|p| score > p.score) {
            best = Some(SightingPair {
                c1: a.camera.clone(),
                c2: b.camera.clone(),
                t1: a.exit,
                t2: b.enter,
                score,
            });
        }
    }
    best
}

fn build(
    world: &World,
    sttg: &Sttg,
    target: PersonId,
    clue: Option<&Clue>,
    saliency: Option<&SaliencyTable>,
    cfg: &GenConfig,
) -> Option<Task> {
    let tgt = world.person(target)?;
    let merged: BTreeMap<PersonId, Trajectory> = world
        .trajectories
        .iter()
        .map(|t| (t.person, t.merged(DEFAULT_FRAME_GAP_S)))
        .collect();
    build_with(world, sttg, tgt, &merged, clue, saliency, cfg)
}

fn build_with(
    world: &World,
    sttg: &Sttg,
    tgt: &PersonRecord,
    merged: &BTreeMap<PersonId, Trajectory>,
    clue: Option<&Clue>,
    saliency: Option<&SaliencyTable>,
    cfg: &GenConfig,
) -> Option<Task> {
    let target = tgt.id;
    let pair = choose_pair(merged.get(&target)?, sttg, cfg)?;
    let gap = pair.t2 - pair.t1;
    let clue = match clue {
        Some(c) => c.clone(),
        None => {
            let all: Vec<&PersonRecord> = world.gallery.iter().collect();
            select_clue(&world.schema, saliency?, tgt, &all, clue_mode(target, cfg.seed))?
        }
    };
    let c0: Vec<&PersonRecord> = world
        .gallery
        .iter()
        .filter(|p| p.attrs.get(&clue.attribute) == Some(&clue.value))
        .collect();
    if c0.len() < POOL_GATE.0 || c0.len() > POOL_GATE.1 {
        return None;
    }
    let empty = Trajectory {
        person: 0,
        visits: Vec::new(),
    };
    let verdicts: BTreeMap<PersonId, Verdict> = c0
        .iter()
        .map(|p| {
            let t = merged.get(&p.id).unwrap_or(&empty);
            (p.id, classify_feasibility(t, &pair.c1, &pair.c2, gap, sttg, cfg.margin).verdict)
        })
        .collect();
    if verdicts[&target] != Verdict::Feasible {
        return None;
    }
    let temporal_elims = verdicts.values().filter(|v| v.is_temporal_elimination()).count();
    let strong = verdicts.values().any(|v| {
        matches!(
            v,
            Verdict::Impossible(
                crate::sttg::feasibility::ImpossibleReason::TimeReversal
                    | crate::sttg::feasibility::ImpossibleReason::TooSlow
            )
        )
    });
    if !strong {
        return None;
    }
    let initial: Vec<&PersonRecord> = c0
        .iter()
        .copied()
        .filter(|p| verdicts[&p.id] != Verdict::Unknown)
        .collect();
    let feasible: Vec<&PersonRecord> = initial
        .iter()
        .copied()
        .filter(|p| verdicts[&p.id] == Verdict::Feasible)
        .collect();
    let temporal = DisambiguationStep {
        kind: StepKind::Temporal,
        attribute: None,
        value: None,
        cameras: None,
        question: None,
        answer: None,
        candidates_before: initial.len() as u32,
        candidates_after: feasible.len() as u32,
        eliminated_ids: initial
            .iter()
            .filter(|p| verdicts[&p.id] != Verdict::Feasible)
            .map(|p| p.id)
            .collect(),
    };
    let (attr_path, last) = simulate_ig_path(&world.schema, tgt, &feasible, cfg.track1_max_turns, cfg.alpha);
    if last != [target] {
        return None;
    }
    let tau_star = 1 + attr_path.len() as u32;
    let vague = vaguify_time(gap).ok()?;
    let mut path = vec![temporal];
    path.extend(attr_path);
    let mut task = Task {
        id: Task::task_id(3, &world.scenario, target),
        track: 3,
        scenario: world.scenario.clone(),
        target,
        clue: clue.clone(),
        initial_candidates: initial.iter().map(|p| p.id).collect(),
        oracle_path: path,
        tau_star,
        difficulty: track3_difficulty(c0.len(), temporal_elims, tau_star as usize),
        difficulty_score: None,
        dialogue: Vec::new(),
        track2: None,
        track3: Some(Track3Info {
            c1: pair.c1.clone(),
            c2: pair.c2.clone(),
            t1: pair.t1,
            t2: pair.t2,
            vague_phrase: vague.to_string(),
            verdicts,
        }),
    };
    let opening = format!(
        "{} I saw them near {}, then {} near {}.",
        clue_sentence(&clue.attribute, &clue.value),
        sttg.sub_area(&pair.c1).unwrap_or("one spot"),
        vague,
        sttg.sub_area(&pair.c2).unwrap_or("another spot"),
    );
    render_dialogue(&mut task, opening, cfg.seed);
    Some(task)
}

/// Track 3 task with a fixed clue.
pub fn build_track3_task(world: &World, sttg: &Sttg, target: PersonId, clue: &Clue, cfg: &GenConfig) -> Option<Task> {
    build(world, sttg, target, Some(clue), None, cfg)
}

pub fn gen_track3(world: &World, sttg: &Sttg, cfg: &GenConfig) -> Vec<Task> {
    let saliency = compute_saliency(&world.schema, &world.gallery);
    let merged: BTreeMap<PersonId, Trajectory> = world
        .trajectories
        .par_iter()
        .map(|t| (t.person, t.merged(DEFAULT_FRAME_GAP_S)))
        .collect();
    let mut tasks: Vec<Task> = world
        .gallery
        .par_iter()
        .filter_map(|p| build_with(world, sttg, p, &merged, None, Some(&saliency), cfg))
        .collect();
    tasks.sort_by_key(|t| t.target);
    tasks
}
