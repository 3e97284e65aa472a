use std::collections::BTreeMap;

use rayon::prelude::*;

use super::difficulty::track2_difficulty;
use super::ig::{attribute_step, best_attribute};
use super::render::{clue_sentence, render_dialogue};
use super::{
    clue_mode, compute_saliency, select_clue, Clue, DisambiguationStep, GenConfig, SaliencyTable, StepKind, Task,
    Track2Info,
};
use crate::sttg::Sttg;
use crate::world::{CameraId, PersonId, PersonRecord, Visit, World};

/// Longest visit, earliest on ties.
fn longest(visits: &[&Visit]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in visits.iter().enumerate() {
        if best.is_none_or(|b| v.duration() > visits[b].duration()) {
            best = Some(i);
        }
    }
    best
}

/// Zone sighting per person inside the window: the longest overlapping
/// visit to any zone camera.
fn sightings(world: &World, zone_cams: &[&str], window: (f64, f64)) -> BTreeMap<PersonId, CameraId> {
    let mut out = BTreeMap::new();
    for t in &world.trajectories {
        let vs: Vec<&Visit> = t
            .visits
            .iter()
            .filter(|v| zone_cams.contains(&v.camera.as_str()) && v.enter <= window.1 && v.exit >= window.0)
            .collect();
        if let Some(i) = longest(&vs) {
            out.insert(t.person, vs[i].camera.clone());
        }
    }
    out
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
    let traj = world.trajectory(target)?;
    let all: Vec<&Visit> = traj.visits.iter().collect();
    let primary = all[longest(&all)?];
    let zone = sttg.zone_of(&primary.camera)?;
    if zone.cameras.len() < 2 {
        return None;
    }
    let tree = sttg.zone_tree(&zone.id)?;
    let branch = tree.branch_of(&primary.camera)?;
    let window = (primary.enter - cfg.window_s, primary.exit + cfg.window_s);
    let zone_cams: Vec<&str> = zone.cameras.iter().map(String::as_str).collect();
    let mut seen = sightings(world, &zone_cams, window);
    seen.insert(target, primary.camera.clone());
    let idx = world.person_index();
    let pool: Vec<&PersonRecord> = seen.keys().filter_map(|i| idx.get(i).copied()).collect();
    let clue = match clue {
        Some(c) => c.clone(),
        None => select_clue(&world.schema, saliency?, tgt, &pool, clue_mode(target, cfg.seed))?,
    };
    let c0: Vec<&PersonRecord> = pool
        .iter()
        .copied()
        .filter(|p| p.attrs.get(&clue.attribute) == Some(&clue.value))
        .collect();
    if c0.len() < 2 {
        return None;
    }

    let mut cands = c0.clone();
    let mut path: Vec<DisambiguationStep> = Vec::new();
    let mut spatial_used = false;
    for _ in 0..cfg.track2_max_turns {
        if cands.len() <= 1 {
            break;
        }
        let outside: Vec<PersonId> = cands
            .iter()
            .filter(|p| !branch.cameras.contains(&seen[&p.id]))
            .map(|p| p.id)
            .collect();
        let spatial_elim = if spatial_used { 0 } else { outside.len() };
        let best = best_attribute(&world.schema, tgt, &cands, &[], cfg.alpha);
        let attr_elim = best.map_or(0, |(d, _)| {
            cands.iter().filter(|p| p.attrs.get(&d.name) != tgt.attrs.get(&d.name)).count()
        });
        if spatial_elim > 0 && spatial_elim as f64 >= 0.5 * attr_elim as f64 {
            let before = cands.len() as u32;
            cands.retain(|p| !outside.contains(&p.id));
            path.push(DisambiguationStep {
                kind: StepKind::Spatial,
                attribute: None,
                value: None,
                cameras: Some(branch.cameras.clone()),
                question: Some(tree.question.clone()),
                answer: Some(branch.answer.clone()),
                candidates_before: before,
                candidates_after: cands.len() as u32,
                eliminated_ids: outside,
            });
            spatial_used = true;
        } else if let Some((def, _)) = best {
            let (step, keep) = attribute_step(&def.name, tgt, &cands);
            cands.retain(|p| keep.contains(&p.id));
            path.push(step);
        } else {
            break;
        }
    }
    if !spatial_used || cands.len() != 1 || cands[0].id != target {
        return None;
    }
    let mut task = Task {
        id: Task::task_id(2, &world.scenario, target),
        track: 2,
        scenario: world.scenario.clone(),
        target,
        clue: clue.clone(),
        initial_candidates: c0.iter().map(|p| p.id).collect(),
        tau_star: path.len() as u32,
        difficulty: track2_difficulty(c0.len(), path.len()),
        difficulty_score: None,
        oracle_path: path,
        dialogue: Vec::new(),
        track2: Some(Track2Info {
            zone: zone.id.clone(),
            primary_camera: primary.camera.clone(),
            window,
            sightings: c0.iter().map(|p| (p.id, seen[&p.id].clone())).collect(),
        }),
        track3: None,
    };
    let opening = format!(
        "{} I saw them somewhere in {}.",
        clue_sentence(&clue.attribute, &clue.value),
        zone.phrase
    );
    render_dialogue(&mut task, opening, cfg.seed);
    Some(task)
}

/// Track 2 task with a fixed clue.
pub fn build_track2_task(world: &World, sttg: &Sttg, target: PersonId, clue: &Clue, cfg: &GenConfig) -> Option<Task> {
    build(world, sttg, target, Some(clue), None, cfg)
}

pub fn gen_track2(world: &World, sttg: &Sttg, cfg: &GenConfig) -> Vec<Task> {
    let saliency = compute_saliency(&world.schema, &world.gallery);
    let mut tasks: Vec<Task> = world
        .gallery
        .par_iter()
        .filter_map(|p| build(world, sttg, p.id, None, Some(&saliency), cfg))
        .collect();
    tasks.sort_by_key(|t| t.target);
    tasks
}
