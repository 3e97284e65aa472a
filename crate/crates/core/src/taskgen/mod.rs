//! Ground-truth task generation for the three tracks.

pub mod clue;
pub mod difficulty;
pub mod ig;
pub mod render;
pub mod saliency;
mod track1;
mod track2;
mod track3;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clue::{clue_mode, select_clue, ClueMode};
pub use difficulty::Difficulty;
pub use ig::{information_gain, simulate_ig_path, ALPHA};
pub use render::{vaguify_time, Speaker, Utterance};
pub use saliency::{compute_saliency, SaliencyTable};
pub use track1::{build_track1_task, gen_track1};
pub use track2::{build_track2_task, gen_track2};
pub use track3::{build_track3_task, gen_track3};

use crate::schema::{AttrValue, AttributeSchema};
use crate::sttg::{Sttg, Verdict, Zone};
use crate::topology::ZoneTree;
use crate::world::{CameraId, PersonId, PersonRecord, World};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid track {0} (expected 1, 2 or 3)")]
    BadTrack(u8),
    #[error("world and graph disagree: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StepKind {
    Attribute,
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationStep {
    pub kind: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<AttrValue>,
    /// Sub-area cameras named by a spatial answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cameras: Option<Vec<CameraId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    pub candidates_before: u32,
    pub candidates_after: u32,
    pub eliminated_ids: Vec<PersonId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clue {
    pub attribute: String,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track2Info {
    pub zone: String,
    pub primary_camera: CameraId,
    pub window: (f64, f64),
    /// Camera where each candidate was seen inside the zone and window.
    pub sightings: BTreeMap<PersonId, CameraId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track3Info {
    pub c1: CameraId,
    pub c2: CameraId,
    /// Exit from `c1` and entry at `c2` of the target's sighting pair.
    pub t1: f64,
    pub t2: f64,
    pub vague_phrase: String,
    /// Verdict for every clue-matching person, UNKNOWN ones included.
    pub verdicts: BTreeMap<PersonId, Verdict>,
}

impl Track3Info {
    pub fn gap(&self) -> f64 {
        self.t2 - self.t1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub track: u8,
    pub scenario: String,
    pub target: PersonId,
    pub clue: Clue,
    pub initial_candidates: Vec<PersonId>,
    pub oracle_path: Vec<DisambiguationStep>,
    pub tau_star: u32,
    pub difficulty: Difficulty,
    /// Batch-independent score behind the Track 1 label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty_score: Option<f64>,
    pub dialogue: Vec<Utterance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track2: Option<Track2Info>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track3: Option<Track3Info>,
}

impl Task {
    pub fn task_id(track: u8, scenario: &str, target: PersonId) -> String {
        format!("T{track}_{scenario}_{target}")
    }

    /// Dialogue shown to the agent when the session starts: everything on
    /// Track 1, only the witness's opening statement otherwise.
    pub fn visible_dialogue(&self) -> &[Utterance] {
        if self.track == 1 {
            &self.dialogue
        } else {
            &self.dialogue[..self.dialogue.len().min(1)]
        }
    }

    pub fn spatial_turns(&self) -> usize {
        self.oracle_path.iter().filter(|s| s.kind == StepKind::Spatial).count()
    }

    pub fn attribute_turns(&self) -> usize {
        self.oracle_path.iter().filter(|s| s.kind == StepKind::Attribute).count()
    }

    /// Candidates left after replaying the path.
    pub fn final_candidates(&self) -> Vec<PersonId> {
        let mut c: BTreeSet<PersonId> = self.initial_candidates.iter().copied().collect();
        for s in &self.oracle_path {
            for e in &s.eliminated_ids {
                c.remove(e);
            }
        }
        c.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub alpha: f64,
    pub track1_max_turns: usize,
    pub track2_max_turns: usize,
    pub window_s: f64,
    pub margin: f64,
    pub min_edge_count: u32,
    /// Sample count that earns the pair-scoring bonus.
    pub high_n: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 42,
            alpha: ALPHA,
            track1_max_turns: 10,
            track2_max_turns: 6,
            window_s: 300.0,
            margin: crate::sttg::feasibility::DEFAULT_MARGIN,
            min_edge_count: 20,
            high_n: 50,
        }
    }
}

/// Self-contained task file: everything the environment needs to host the
/// tasks without the world or graph files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    pub topology_name: String,
    pub scenario: String,
    pub seed: u64,
    pub schema: AttributeSchema,
    /// Gallery records of every person referenced by a task.
    pub persons: Vec<PersonRecord>,
    pub zones: Vec<Zone>,
    pub zone_trees: Vec<ZoneTree>,
    pub tasks: Vec<Task>,
}

impl TaskSet {
    pub fn new(world: &World, sttg: Option<&Sttg>, seed: u64, mut tasks: Vec<Task>) -> TaskSet {
        tasks.sort_by(|a, b| (a.track, a.target).cmp(&(b.track, b.target)));
        let referenced: BTreeSet<PersonId> = tasks
            .iter()
            .flat_map(|t| t.initial_candidates.iter().copied().chain([t.target]))
            .chain(
                tasks
                    .iter()
                    .filter_map(|t| t.track3.as_ref())
                    .flat_map(|x| x.verdicts.keys().copied()),
            )
            .collect();
        let persons = world
            .gallery
            .iter()
            .filter(|p| referenced.contains(&p.id))
            .cloned()
            .collect();
        TaskSet {
            topology_name: world.topology_name.clone(),
            scenario: world.scenario.clone(),
            seed,
            schema: world.schema.clone(),
            persons,
            zones: sttg.map(|s| s.zones.clone()).unwrap_or_default(),
            zone_trees: sttg.map(|s| s.zone_trees.clone()).unwrap_or_default(),
            tasks,
        }
    }

    pub fn person(&self, id: PersonId) -> Option<&PersonRecord> {
        self.persons
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.persons[i])
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn to_canonical_json(&self) -> String {
        crate::io::canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<TaskSet, TaskError> {
        let mut s: TaskSet = serde_json::from_str(text).map_err(|e| TaskError::Parse(e.to_string()))?;
        s.persons.sort_by_key(|p| p.id);
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TaskSet, TaskError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TaskError::Io {
            path: path.display().to_string(),
            source,
        })?;
        TaskSet::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TaskError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_canonical_json()).map_err(|source| TaskError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Generate one track. Tracks 2 and 3 need the graph.
pub fn gen_track(world: &World, sttg: &Sttg, track: u8, cfg: &GenConfig) -> Result<Vec<Task>, TaskError> {
    if world.topology_name != sttg.topology_name {
        return Err(TaskError::Mismatch(format!(
            "world topology {} vs graph {}",
            world.topology_name, sttg.topology_name
        )));
    }
    match track {
        1 => Ok(gen_track1(world, cfg)),
        2 => Ok(gen_track2(world, sttg, cfg)),
        3 => Ok(gen_track3(world, sttg, cfg)),
        t => Err(TaskError::BadTrack(t)),
    }
}

/// Fraction of IG-eligible attributes on which the person is Uncertain.
pub(crate) fn uncertain_ratio(schema: &AttributeSchema, p: &PersonRecord) -> f64 {
    let ig = schema.ig_attributes();
    let unc = ig
        .iter()
        .filter(|d| p.attrs.get(&d.name).is_none_or(|v| v.is_uncertain()))
        .count();
    unc as f64 / ig.len() as f64
}
