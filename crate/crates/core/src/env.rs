//! Session controller: tool registry, turn accounting and the step interface.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Counters, Outcome, Transcript};
use crate::schema::{AttrValue, AttributeSchema};
use crate::sttg::Verdict;
use crate::taskgen::{Speaker, Task, TaskSet, Utterance};
use crate::witness::{Witness, WitnessConfig, WitnessError};
use crate::world::{CameraId, PersonId, PersonRecord};

pub const TURN_BUDGET: u32 = 20;
/// Hard stop on total actions so a looping agent cannot hang a session.
pub const ACTION_CAP: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    QueryGalleryDistribution,
    QueryGalleryRecords,
    GetZoneStructure,
    AskWitness,
    CheckTemporal,
    FilterByAttribute,
    FilterByLocation,
    Predict,
}

impl Tool {
    pub const ALL: [Tool; 8] = [
        Tool::QueryGalleryDistribution,
        Tool::QueryGalleryRecords,
        Tool::GetZoneStructure,
        Tool::AskWitness,
        Tool::CheckTemporal,
        Tool::FilterByAttribute,
        Tool::FilterByLocation,
        Tool::Predict,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Tool::QueryGalleryDistribution => "T1",
            Tool::QueryGalleryRecords => "T2",
            Tool::GetZoneStructure => "T3",
            Tool::AskWitness => "T4",
            Tool::CheckTemporal => "T5",
            Tool::FilterByAttribute => "T6",
            Tool::FilterByLocation => "T7",
            Tool::Predict => "T8",
        }
    }

    pub fn consumes_turn(self) -> bool {
        matches!(self, Tool::AskWitness | Tool::CheckTemporal)
    }
}

/// Tools a track permits. Track 3 also refuses spatial witness questions,
/// which is checked per action.
pub fn tool_availability(track: u8) -> Vec<Tool> {
    Tool::ALL
        .into_iter()
        .filter(|t| match track {
            1 => matches!(
                t,
                Tool::QueryGalleryDistribution | Tool::QueryGalleryRecords | Tool::FilterByAttribute | Tool::Predict
            ),
            2 => *t != Tool::CheckTemporal,
            3 => *t != Tool::FilterByLocation,
            _ => false,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tool", rename_all = "snake_case")]
pub enum Action {
    QueryGalleryDistribution,
    QueryGalleryRecords,
    GetZoneStructure,
    AskWitness {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attribute: Option<String>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        spatial: bool,
    },
    CheckTemporal,
    FilterByAttribute {
        attribute: String,
        value: AttrValue,
    },
    FilterByLocation {
        cameras: Vec<CameraId>,
    },
    Predict {
        person: PersonId,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        ranking: Vec<PersonId>,
    },
}

impl Action {
    pub fn tool(&self) -> Tool {
        match self {
            Action::QueryGalleryDistribution => Tool::QueryGalleryDistribution,
            Action::QueryGalleryRecords => Tool::QueryGalleryRecords,
            Action::GetZoneStructure => Tool::GetZoneStructure,
            Action::AskWitness { .. } => Tool::AskWitness,
            Action::CheckTemporal => Tool::CheckTemporal,
            Action::FilterByAttribute { .. } => Tool::FilterByAttribute,
            Action::FilterByLocation { .. } => Tool::FilterByLocation,
            Action::Predict { .. } => Tool::Predict,
        }
    }

    pub fn ask(attribute: &str) -> Action {
        Action::AskWitness {
            attribute: Some(attribute.to_string()),
            spatial: false,
        }
    }

    pub fn ask_spatial() -> Action {
        Action::AskWitness {
            attribute: None,
            spatial: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ValueCount {
    pub value: AttrValue,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchView {
    pub label: String,
    pub cameras: Vec<CameraId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Distribution {
        histograms: BTreeMap<String, Vec<ValueCount>>,
        candidate_ids: Vec<PersonId>,
    },
    Records {
        records: Vec<PersonRecord>,
        /// Track 2: camera where each candidate was seen inside the zone.
        #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "id_keys::opt")]
        sightings: Option<BTreeMap<PersonId, CameraId>>,
    },
    ZoneStructure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        question: Option<String>,
        branches: Vec<BranchView>,
    },
    WitnessReply {
        text: String,
    },
    Temporal {
        #[serde(deserialize_with = "id_keys::map")]
        verdicts: BTreeMap<PersonId, Verdict>,
    },
    Filtered {
        removed: u32,
    },
    Prediction {
        person: PersonId,
    },
}

/// Person-keyed maps inside the tagged payload are buffered by serde, which
/// leaves their JSON keys as strings; parse them back here.
mod id_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer};

    use crate::world::PersonId;

    pub fn map<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<BTreeMap<PersonId, T>, D::Error> {
        BTreeMap::<String, T>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("bad person id `{k}`"))))
            .collect()
    }

    pub fn opt<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Option<BTreeMap<PersonId, T>>, D::Error> {
        map(d).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub payload: Payload,
    pub candidates_remaining: u32,
    pub turns_used: u32,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

/// What an agent sees when a session opens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: String,
    pub track: u8,
    pub dialogue: Vec<Utterance>,
    pub candidates: Vec<PersonId>,
    pub budget: u32,
    pub tools: Vec<Tool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", content = "detail", rename_all = "snake_case")]
pub enum EnvError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("tool {tool:?} is not available on track {track}")]
    WrongTool { tool: Tool, track: u8 },
    #[error("malformed arguments: {0}")]
    MalformedArgs(String),
    #[error("session already finished")]
    SessionDone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub budget: u32,
    pub action_cap: u32,
    pub witness: WitnessConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            budget: TURN_BUDGET,
            action_cap: ACTION_CAP,
            witness: WitnessConfig::default(),
        }
    }
}

/// Anything an agent can act against: an in-process session or a remote one.
pub trait EnvHandle {
    fn view(&self) -> &TaskView;
    fn schema(&self) -> &AttributeSchema;
    fn step(&mut self, action: &Action) -> Result<Observation, EnvError>;
    fn done(&self) -> bool;
}

/// Live state of one task attempt.
pub struct Session<'a> {
    set: &'a TaskSet,
    task: &'a Task,
    witness: Witness<'a>,
    cfg: EnvConfig,
    view: TaskView,
    candidates: BTreeSet<PersonId>,
    turns_used: u32,
    actions_taken: u32,
    done: bool,
    outcome: Option<Outcome>,
    counters: Counters,
    trace: Vec<u32>,
    asked: BTreeSet<String>,
    temporal_done: bool,
    predicted: Option<PersonId>,
    ranking: Vec<PersonId>,
    dialogue: Vec<Utterance>,
    actions: Vec<Action>,
    agent: String,
}

impl<'a> Session<'a> {
    pub fn new(set: &'a TaskSet, task_id: &str, cfg: EnvConfig) -> Result<Session<'a>, EnvError> {
        let task = set
            .task(task_id)
            .ok_or_else(|| EnvError::UnknownTask(task_id.to_string()))?;
        let target = set
            .person(task.target)
            .ok_or_else(|| EnvError::UnknownTask(format!("{task_id} (target record missing)")))?;
        let witness = Witness::new(task, target, cfg.witness.clone());
        let view = TaskView {
            task_id: task.id.clone(),
            track: task.track,
            dialogue: task.visible_dialogue().to_vec(),
            candidates: task.initial_candidates.clone(),
            budget: cfg.budget,
            tools: tool_availability(task.track),
        };
        Ok(Session {
            set,
            task,
            witness,
            view,
            candidates: task.initial_candidates.iter().copied().collect(),
            turns_used: 0,
            actions_taken: 0,
            done: false,
            outcome: None,
            counters: Counters::default(),
            trace: vec![task.initial_candidates.len() as u32],
            asked: BTreeSet::new(),
            temporal_done: false,
            predicted: None,
            ranking: Vec::new(),
            dialogue: task.visible_dialogue().to_vec(),
            actions: Vec::new(),
            agent: String::new(),
            cfg,
        })
    }

    pub fn with_agent_name(mut self, name: &str) -> Self {
        self.agent = name.to_string();
        self
    }

    pub fn task(&self) -> &Task {
        self.task
    }

    pub fn candidates(&self) -> &BTreeSet<PersonId> {
        &self.candidates
    }

    pub fn turns_used(&self) -> u32 {
        self.turns_used
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn dialogue(&self) -> &[Utterance] {
        &self.dialogue
    }

    pub fn uncertain_observables(&self) -> &[String] {
        &self.witness.uncertain_observables
    }

    fn observation(&self, payload: Payload) -> Observation {
        Observation {
            payload,
            candidates_remaining: self.candidates.len() as u32,
            turns_used: self.turns_used,
            done: self.done,
            outcome: self.outcome,
        }
    }

    fn available(&self, action: &Action) -> bool {
        if !self.view.tools.contains(&action.tool()) {
            return false;
        }
        !(self.task.track == 3 && matches!(action, Action::AskWitness { spatial: true, .. }))
    }

    /// Count at the end of the current turn; on Track 1, where no action
    /// consumes a turn, every filter appends an entry instead.
    fn record_count(&mut self, filter: bool) {
        let n = self.candidates.len() as u32;
        if self.task.track == 1 {
            if filter {
                self.trace.push(n);
            }
        } else if self.turns_used > 0 {
            *self.trace.last_mut().expect("trace starts non-empty") = n;
        }
    }

    /// Keep candidates passing `keep`; counts an over-filter when a filter
    /// tool drops the target.
    fn filter(&mut self, keep: impl Fn(PersonId) -> bool, filter_tool: bool) -> u32 {
        let before = self.candidates.len();
        let had = self.candidates.contains(&self.task.target);
        self.candidates.retain(|&p| keep(p));
        if filter_tool && had && !self.candidates.contains(&self.task.target) {
            self.counters.over_filter += 1;
        }
        (before - self.candidates.len()) as u32
    }

    fn begin_turn(&mut self) {
        self.turns_used += 1;
        self.trace.push(self.candidates.len() as u32);
    }

    pub fn step(&mut self, action: &Action) -> Result<Observation, EnvError> {
        if self.done {
            return Err(EnvError::SessionDone);
        }
        self.actions_taken += 1;
        let result = self.apply(action);
        if result.is_ok() {
            self.actions.push(action.clone());
        }
        if !self.done && self.actions_taken >= self.cfg.action_cap {
            self.done = true;
            self.outcome = Some(Outcome::Timeout);
        }
        result.map(|p| self.observation(p))
    }

    fn apply(&mut self, action: &Action) -> Result<Payload, EnvError> {
        if !self.available(action) {
            self.counters.wrong_tool += 1;
            return Err(EnvError::WrongTool {
                tool: action.tool(),
                track: self.task.track,
            });
        }
        let schema = &self.set.schema;
        let payload = match action {
            Action::QueryGalleryDistribution => {
                let mut histograms: BTreeMap<String, Vec<ValueCount>> = BTreeMap::new();
                for def in &schema.attributes {
                    let mut counts: BTreeMap<&AttrValue, u32> = BTreeMap::new();
                    for id in &self.candidates {
                        if let Some(v) = self.set.person(*id).and_then(|p| p.attrs.get(&def.name)) {
                            *counts.entry(v).or_default() += 1;
                        }
                    }
                    histograms.insert(
                        def.name.clone(),
                        counts
                            .into_iter()
                            .map(|(v, c)| ValueCount {
                                value: v.clone(),
                                count: c,
                            })
                            .collect(),
                    );
                }
                Payload::Distribution {
                    histograms,
                    candidate_ids: self.candidates.iter().copied().collect(),
                }
            }
            Action::QueryGalleryRecords => {
                let records = self
                    .candidates
                    .iter()
                    .filter_map(|id| self.set.person(*id).cloned())
                    .collect();
                let sightings = self.task.track2.as_ref().map(|t2| {
                    t2.sightings
                        .iter()
                        .filter(|(id, _)| self.candidates.contains(id))
                        .map(|(id, c)| (*id, c.clone()))
                        .collect()
                });
                Payload::Records { records, sightings }
            }
            Action::GetZoneStructure => {
                let tree = self
                    .task
                    .track2
                    .as_ref()
                    .and_then(|t2| self.set.zone_trees.iter().find(|z| z.zone == t2.zone));
                match tree {
                    Some(t) => Payload::ZoneStructure {
                        question: Some(t.question.clone()),
                        branches: t
                            .branches
                            .iter()
                            .map(|b| BranchView {
                                label: b.label.clone(),
                                cameras: b.cameras.clone(),
                            })
                            .collect(),
                    },
                    None => Payload::ZoneStructure {
                        question: None,
                        branches: Vec::new(),
                    },
                }
            }
            Action::AskWitness { attribute, spatial } => {
                let (question, text) = match (attribute, spatial) {
                    (None, true) => {
                        let reply = self.witness.respond_spatial().map_err(witness_err)?;
                        if !reply.informative {
                            self.counters.redundant_q += 1;
                        }
                        let q = self
                            .task
                            .oracle_path
                            .iter()
                            .find_map(|s| s.question.clone().filter(|_| s.cameras.is_some()))
                            .unwrap_or_else(|| "Where exactly did you see them?".to_string());
                        (q, reply.text)
                    }
                    (Some(attr), false) => {
                        let (text, _) = self.witness.respond_attribute(schema, attr).map_err(witness_err)?;
                        if !self.asked.insert(attr.clone()) {
                            self.counters.redundant_q += 1;
                        }
                        let q = crate::taskgen::render::question_for(attr)
                            .unwrap_or("Can you tell me more?")
                            .to_string();
                        (q, text)
                    }
                    _ => {
                        self.counters.malformed += 1;
                        return Err(EnvError::MalformedArgs(
                            "ask_witness needs exactly one of `attribute` or `spatial: true`".into(),
                        ));
                    }
                };
                self.begin_turn();
                self.dialogue.push(Utterance::new(Speaker::Agent, question));
                self.dialogue.push(Utterance::new(Speaker::Witness, text.clone()));
                Payload::WitnessReply { text }
            }
            Action::CheckTemporal => {
                let Some(t3) = self.task.track3.as_ref() else {
                    self.counters.wrong_tool += 1;
                    return Err(EnvError::WrongTool {
                        tool: Tool::CheckTemporal,
                        track: self.task.track,
                    });
                };
                if self.temporal_done {
                    self.counters.redundant_q += 1;
                }
                self.temporal_done = true;
                self.begin_turn();
                let verdicts: BTreeMap<PersonId, Verdict> = self
                    .candidates
                    .iter()
                    .map(|id| (*id, t3.verdicts.get(id).copied().unwrap_or(Verdict::Unknown)))
                    .collect();
                let keep: BTreeSet<PersonId> = verdicts
                    .iter()
                    .filter(|(_, v)| **v == Verdict::Feasible)
                    .map(|(id, _)| *id)
                    .collect();
                self.filter(|p| keep.contains(&p), false);
                self.record_count(false);
                Payload::Temporal { verdicts }
            }
            Action::FilterByAttribute { attribute, value } => {
                if let Err(e) = schema.check_value(attribute, value) {
                    self.counters.malformed += 1;
                    return Err(EnvError::MalformedArgs(e));
                }
                let set = self.set;
                let removed = self.filter(|p| set.person(p).and_then(|r| r.attrs.get(attribute)) == Some(value), true);
                self.record_count(true);
                Payload::Filtered { removed }
            }
            Action::FilterByLocation { cameras } => {
                if cameras.is_empty() {
                    self.counters.malformed += 1;
                    return Err(EnvError::MalformedArgs("filter_by_location needs at least one camera".into()));
                }
                let sightings = self.task.track2.as_ref().map(|t| &t.sightings);
                let removed = self.filter(|p| {
                    sightings
                        .and_then(|s| s.get(&p))
                        .is_some_and(|c| cameras.contains(c))
                }, true);
                self.record_count(true);
                Payload::Filtered { removed }
            }
            Action::Predict { person, ranking } => {
                let correct = *person == self.task.target;
                if !correct && self.candidates.len() > 1 {
                    self.counters.premature += 1;
                }
                self.predicted = Some(*person);
                self.ranking = if ranking.is_empty() { vec![*person] } else { ranking.clone() };
                self.done = true;
                self.outcome = Some(if correct { Outcome::Correct } else { Outcome::Wrong });
                return Ok(Payload::Prediction { person: *person });
            }
        };
        if action.tool().consumes_turn() && self.turns_used >= self.cfg.budget && !self.done {
            self.done = true;
            self.outcome = Some(Outcome::Timeout);
        }
        Ok(payload)
    }

    /// Transcript of the session so far. An unfinished session is reported
    /// as a timeout.
    pub fn transcript(&self) -> Transcript {
        let ranking: Vec<PersonId> = self.ranking.iter().copied().take(5).collect();
        Transcript {
            task_id: self.task.id.clone(),
            track: self.task.track,
            agent: self.agent.clone(),
            outcome: self.outcome.unwrap_or(Outcome::Timeout),
            turns_used: self.turns_used,
            oracle_turns: self.task.tau_star,
            trace: self.trace.clone(),
            counters: self.counters.clone(),
            predicted: self.predicted,
            in_top5: ranking.contains(&self.task.target),
            ranking,
            actions: self.actions.clone(),
        }
    }
}

fn witness_err(e: WitnessError) -> EnvError {
    EnvError::MalformedArgs(e.to_string())
}

impl EnvHandle for Session<'_> {
    fn view(&self) -> &TaskView {
        &self.view
    }

    fn schema(&self) -> &AttributeSchema {
        &self.set.schema
    }

    fn step(&mut self, action: &Action) -> Result<Observation, EnvError> {
        Session::step(self, action)
    }

    fn done(&self) -> bool {
        self.done
    }
}
