use rayon::prelude::*;

use super::clue::POOL_GATE;
use super::difficulty::{difficulty_score, label_batch, Difficulty};
use super::render::{clue_sentence, render_dialogue};
use super::{clue_mode, compute_saliency, select_clue, simulate_ig_path, uncertain_ratio, Clue, GenConfig, Task};
use crate::world::{PersonId, PersonRecord, World};

/// Track 1 task for `target` with a fixed opening clue. None when the pool
/// falls outside the size gate or the path does not isolate the target.
pub fn build_track1_task(world: &World, target: PersonId, clue: &Clue, cfg: &GenConfig) -> Option<Task> {
    let tgt = world.person(target)?;
    let c0: Vec<&PersonRecord> = world
        .gallery
        .iter()
        .filter(|p| p.attrs.get(&clue.attribute) == Some(&clue.value))
        .collect();
    if c0.len() < POOL_GATE.0 || c0.len() > POOL_GATE.1 {
        return None;
    }
    let (path, last) = simulate_ig_path(&world.schema, tgt, &c0, cfg.track1_max_turns, cfg.alpha);
    if last != [target] {
        return None;
    }
    let score = difficulty_score(c0.len(), path.len(), uncertain_ratio(&world.schema, tgt));
    let mut task = Task {
        id: Task::task_id(1, &world.scenario, target),
        track: 1,
        scenario: world.scenario.clone(),
        target,
        clue: clue.clone(),
        initial_candidates: c0.iter().map(|p| p.id).collect(),
        tau_star: path.len() as u32,
        oracle_path: path,
        difficulty: Difficulty::Medium,
        difficulty_score: Some(score),
        dialogue: Vec::new(),
        track2: None,
        track3: None,
    };
    let opening = clue_sentence(&clue.attribute, &clue.value);
    render_dialogue(&mut task, opening, cfg.seed);
    Some(task)
}

/// All Track 1 tasks over the gallery, sorted by target id, difficulty
/// labelled against the batch.
pub fn gen_track1(world: &World, cfg: &GenConfig) -> Vec<Task> {
    let saliency = compute_saliency(&world.schema, &world.gallery);
    let all: Vec<&PersonRecord> = world.gallery.iter().collect();
    let mut tasks: Vec<Task> = world
        .gallery
        .par_iter()
        .filter_map(|p| {
            let mode = clue_mode(p.id, cfg.seed);
            let clue = select_clue(&world.schema, &saliency, p, &all, mode)?;
            build_track1_task(world, p.id, &clue, cfg)
        })
        .collect();
    tasks.sort_by_key(|t| t.target);
    let scores: Vec<f64> = tasks.iter().map(|t| t.difficulty_score.unwrap_or(0.0)).collect();
    for (t, d) in tasks.iter_mut().zip(label_batch(&scores)) {
        t.difficulty = d;
    }
    tasks
}
