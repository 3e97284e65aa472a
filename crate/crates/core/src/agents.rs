//! Reference agents: oracle replay, greedy information gain, a fixed-order
//! rule agent and a random-order ablation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Action, BranchView, EnvConfig, EnvError, EnvHandle, Observation, Payload, Session, Tool, ValueCount};
use crate::metrics::Transcript;
use crate::rng::{derive, seeded, str_key};
use crate::schema::{AttrValue, AttributeSchema};
use crate::taskgen::ig::information_gain_from_hist;
use crate::taskgen::render::attribute_for_question;
use crate::taskgen::{Speaker, StepKind, Task, TaskSet, ALPHA};
use crate::witness::{parse_witness_response, ParsedAnswer};
use crate::world::{CameraId, PersonId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Oracle,
    Greedy,
    RuleBased,
    RandomOrder,
}

impl AgentKind {
    pub fn parse(s: &str) -> Option<AgentKind> {
        match s {
            "oracle" => Some(AgentKind::Oracle),
            "greedy" | "greedy-ig" | "greedy_ig" => Some(AgentKind::Greedy),
            "rule" | "rule-based" | "rule_based" => Some(AgentKind::RuleBased),
            "random" | "random-order" | "random_order" => Some(AgentKind::RandomOrder),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Oracle => "oracle",
            AgentKind::Greedy => "greedy",
            AgentKind::RuleBased => "rule_based",
            AgentKind::RandomOrder => "random_order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub seed: u64,
    pub temporal_first: bool,
    pub spatial_rule_threshold: f64,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        AgentConfig {
            kind,
            seed: 0,
            temporal_first: true,
            spatial_rule_threshold: 0.5,
        }
    }
}

pub trait Agent {
    fn name(&self) -> String;
    /// Drive the session until it is done.
    fn run(&mut self, env: &mut dyn EnvHandle);
}

/// Replays the stored oracle path. Needs the task, which no other agent sees.
pub struct OracleAgent {
    task: Task,
}

impl OracleAgent {
    pub fn new(task: Task) -> Self {
        OracleAgent { task }
    }
}

impl Agent for OracleAgent {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn run(&mut self, env: &mut dyn EnvHandle) {
        let track = self.task.track;
        for step in &self.task.oracle_path {
            match step.kind {
                StepKind::Temporal => {
                    let _ = env.step(&Action::CheckTemporal);
                }
                StepKind::Spatial => {
                    let _ = env.step(&Action::ask_spatial());
                    let cameras = step.cameras.clone().unwrap_or_default();
                    let _ = env.step(&Action::FilterByLocation { cameras });
                }
                StepKind::Attribute => {
                    let attribute = step.attribute.clone().unwrap_or_default();
                    if track != 1 {
                        let _ = env.step(&Action::ask(&attribute));
                    }
                    let value = step.value.clone().unwrap_or_else(AttrValue::uncertain);
                    let _ = env.step(&Action::FilterByAttribute { attribute, value });
                }
            }
            if env.done() {
                return;
            }
        }
        let _ = env.step(&Action::Predict {
            person: self.task.target,
            ranking: vec![self.task.target],
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Greedy,
    Fixed,
    Random,
}

/// Fixed questioning order used by the rule-based agent.
pub const RULE_PRIORITY: [&str; 21] = [
    "upper_garment_color",
    "lower_garment_color",
    "visual_gender",
    "upper_garment_type",
    "lower_garment_type",
    "hair_style",
    "hair_color",
    "shoe_type",
    "headwear_type",
    "torso_bag_type",
    "items_held",
    "eyewear_type",
    "mask_state",
    "shoe_color",
    "upper_color_layout",
    "lower_color_layout",
    "upper_fit_style",
    "lower_fit_style",
    "upper_state",
    "visual_age_style",
    "body_shape",
];

/// The analyse / plan / ask / interpret loop without a language model.
pub struct PlannerAgent {
    cfg: AgentConfig,
    order: Order,
    /// Parse failures, for diagnostics.
    pub parse_failures: u32,
}

impl PlannerAgent {
    pub fn new(cfg: AgentConfig) -> Self {
        let order = match cfg.kind {
            AgentKind::RuleBased => Order::Fixed,
            AgentKind::RandomOrder => Order::Random,
            _ => Order::Greedy,
        };
        PlannerAgent {
            cfg,
            order,
            parse_failures: 0,
        }
    }

    pub fn greedy() -> Self {
        PlannerAgent::new(AgentConfig::new(AgentKind::Greedy))
    }

    /// Greedy agent that never calls the temporal tool.
    pub fn greedy_without_temporal() -> Self {
        let mut cfg = AgentConfig::new(AgentKind::Greedy);
        cfg.temporal_first = false;
        PlannerAgent::new(cfg)
    }
}

/// Expected eliminations when the answer follows the current distribution:
/// n - sum(n_v^2) / n over definite values.
fn expected_elim(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c as f64).powi(2)).sum();
    n as f64 - sq / n as f64
}

fn definite(h: &[ValueCount]) -> (Vec<u32>, u32) {
    let mut counts = Vec::new();
    let mut unc = 0;
    for vc in h {
        if vc.value.is_uncertain() {
            unc += vc.count;
        } else {
            counts.push(vc.count);
        }
    }
    (counts, unc)
}

fn smallest(cands: &BTreeSet<PersonId>) -> Option<PersonId> {
    cands.iter().next().copied()
}

fn predict(env: &mut dyn EnvHandle, cands: &BTreeSet<PersonId>) {
    let ranking: Vec<PersonId> = cands.iter().take(5).copied().collect();
    let person = smallest(cands).unwrap_or_else(|| env.view().candidates.first().copied().unwrap_or(0));
    let _ = env.step(&Action::Predict { person, ranking });
}

fn histograms(env: &mut dyn EnvHandle) -> Option<(BTreeMap<String, Vec<ValueCount>>, BTreeSet<PersonId>)> {
    match env.step(&Action::QueryGalleryDistribution) {
        Ok(Observation {
            payload: Payload::Distribution {
                histograms,
                candidate_ids,
            },
            ..
        }) => Some((histograms, candidate_ids.into_iter().collect())),
        _ => None,
    }
}

impl PlannerAgent {
    /// Apply what the witness already said in a Track 1 dialogue.
    fn read_dialogue(&mut self, env: &mut dyn EnvHandle, schema: &AttributeSchema) {
        let dialogue = env.view().dialogue.clone();
        for pair in dialogue.windows(2) {
            if pair[0].speaker != Speaker::Agent || pair[1].speaker != Speaker::Witness {
                continue;
            }
            let Some(attr) = attribute_for_question(&pair[0].text) else { continue };
            match parse_witness_response(&pair[1].text, attr, schema) {
                ParsedAnswer::Value(value) => {
                    let _ = env.step(&Action::FilterByAttribute {
                        attribute: attr.to_string(),
                        value,
                    });
                }
                ParsedAnswer::Uncertain => {}
                ParsedAnswer::ParseFailure => self.parse_failures += 1,
            }
        }
    }

    fn attribute_order(&self, schema: &AttributeSchema, task_id: &str) -> Vec<String> {
        match self.order {
            Order::Fixed => RULE_PRIORITY.iter().map(|s| s.to_string()).collect(),
            Order::Random => {
                let mut names: Vec<String> = schema.ig_attributes().iter().map(|d| d.name.clone()).collect();
                names.sort();
                let mut rng = seeded(derive(self.cfg.seed, &[str_key(task_id)]));
                names.shuffle(&mut rng);
                names
            }
            Order::Greedy => Vec::new(),
        }
    }

    /// Next attribute to ask: best IG for the greedy agent, first
    /// informative attribute in order for the others.
    fn pick_attribute(
        &self,
        schema: &AttributeSchema,
        hist: &BTreeMap<String, Vec<ValueCount>>,
        asked: &BTreeSet<String>,
        order: &[String],
    ) -> Option<(String, f64)> {
        let score = |name: &str| -> Option<f64> {
            let def = schema.get(name)?;
            if def.ig_excluded || asked.contains(name) {
                return None;
            }
            let (counts, unc) = definite(hist.get(name)?);
            let c: Vec<usize> = counts.iter().map(|&x| x as usize).collect();
            let ig = information_gain_from_hist(&c, unc as usize, ALPHA);
            (ig > 0.0).then(|| ig)
        };
        match self.order {
            Order::Greedy => {
                let mut names: Vec<&str> = schema.names().collect();
                names.sort_unstable();
                let mut best: Option<(String, f64)> = None;
                for n in names {
                    if let Some(ig) = score(n) {
                        if best.as_ref().is_none_or(|(_, b)| ig > *b) {
                            best = Some((n.to_string(), ig));
                        }
                    }
                }
                best
            }
            _ => order
                .iter()
                .find_map(|n| score(n).map(|ig| (n.clone(), ig))),
        }
    }

    fn ask_attribute(&mut self, env: &mut dyn EnvHandle, schema: &AttributeSchema, attr: &str) {
        let Ok(obs) = env.step(&Action::ask(attr)) else { return };
        if obs.done {
            return;
        }
        let Payload::WitnessReply { text } = obs.payload else { return };
        match parse_witness_response(&text, attr, schema) {
            ParsedAnswer::Value(value) => {
                let _ = env.step(&Action::FilterByAttribute {
                    attribute: attr.to_string(),
                    value,
                });
            }
            ParsedAnswer::Uncertain => {}
            ParsedAnswer::ParseFailure => self.parse_failures += 1,
        }
    }

    fn ask_spatial(&mut self, env: &mut dyn EnvHandle, branches: &[BranchView]) {
        let Ok(obs) = env.step(&Action::ask_spatial()) else { return };
        if obs.done {
            return;
        }
        let Payload::WitnessReply { text } = obs.payload else { return };
        let lower = text.to_lowercase();
        let hit = branches
            .iter()
            .filter(|b| lower.contains(&b.label.to_lowercase()))
            .max_by_key(|b| b.label.len());
        match hit {
            Some(b) => {
                let _ = env.step(&Action::FilterByLocation {
                    cameras: b.cameras.clone(),
                });
            }
            None => self.parse_failures += 1,
        }
    }

    /// Expected eliminations of the spatial question given current sightings.
    fn spatial_expectation(env: &mut dyn EnvHandle, branches: &[BranchView]) -> f64 {
        let Ok(Observation {
            payload: Payload::Records {
                sightings: Some(sightings),
                ..
            },
            ..
        }) = env.step(&Action::QueryGalleryRecords)
        else {
            return 0.0;
        };
        let counts: Vec<u32> = branches
            .iter()
            .map(|b| sightings.values().filter(|c| b.cameras.contains(c)).count() as u32)
            .collect();
        let n = sightings.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let sq: f64 = counts.iter().map(|&c| (c as f64).powi(2)).sum();
        n - sq / n
    }
}

impl Agent for PlannerAgent {
    fn name(&self) -> String {
        let base = self.cfg.kind.name();
        if self.cfg.temporal_first {
            base.to_string()
        } else {
            format!("{base}_no_temporal")
        }
    }

    fn run(&mut self, env: &mut dyn EnvHandle) {
        let schema = env.schema().clone();
        let view = env.view().clone();
        let order = self.attribute_order(&schema, &view.task_id);
        let mut asked: BTreeSet<String> = BTreeSet::new();
        let mut spatial_done = false;
        let mut branches: Vec<BranchView> = Vec::new();
        if view.track == 1 {
            self.read_dialogue(env, &schema);
            let cands = histograms(env).map(|(_, c)| c).unwrap_or_default();
            predict(env, &cands);
            return;
        }
        if view.track == 3 && self.cfg.temporal_first && view.tools.contains(&Tool::CheckTemporal) {
            let _ = env.step(&Action::CheckTemporal);
        }
        if view.track == 2 {
            if let Ok(Observation {
                payload: Payload::ZoneStructure { branches: b, .. },
                ..
            }) = env.step(&Action::GetZoneStructure)
            {
                branches = b;
            }
            spatial_done = branches.is_empty();
        }
        while !env.done() {
            let Some((hist, cands)) = histograms(env) else { return };
            if cands.len() <= 1 {
                predict(env, &cands);
                return;
            }
            let attr = self.pick_attribute(&schema, &hist, &asked, &order);
            let attr_exp = attr.as_ref().map_or(0.0, |(a, _)| {
                hist.get(a).map_or(0.0, |h| expected_elim(&definite(h).0))
            });
            if !spatial_done {
                let sp = Self::spatial_expectation(env, &branches);
                if sp > 0.0 && sp >= self.cfg.spatial_rule_threshold * attr_exp {
                    spatial_done = true;
                    self.ask_spatial(env, &branches);
                    continue;
                }
            }
            match attr {
                Some((a, _)) => {
                    asked.insert(a.clone());
                    self.ask_attribute(env, &schema, &a);
                }
                None => {
                    predict(env, &cands);
                    return;
                }
            }
        }
    }
}

pub fn make_agent(cfg: &AgentConfig, task: &Task) -> Box<dyn Agent + Send> {
    match cfg.kind {
        AgentKind::Oracle => Box::new(OracleAgent::new(task.clone())),
        _ => Box::new(PlannerAgent::new(cfg.clone())),
    }
}

/// Camera subset named by a spatial answer, if any branch label matches.
pub fn match_branch<'b>(answer: &str, branches: &'b [BranchView]) -> Option<&'b [CameraId]> {
    let lower = answer.to_lowercase();
    branches
        .iter()
        .filter(|b| lower.contains(&b.label.to_lowercase()))
        .max_by_key(|b| b.label.len())
        .map(|b| b.cameras.as_slice())
}

/// Run one agent over tasks of a set in parallel; transcripts come back in
/// the order of `task_ids`.
pub fn run_batch(set: &TaskSet, task_ids: &[String], cfg: &AgentConfig, env_cfg: &EnvConfig) -> Result<Vec<Transcript>, EnvError> {
    task_ids
        .par_iter()
        .map(|id| {
            let mut session = Session::new(set, id, env_cfg.clone())?;
            let mut agent = make_agent(cfg, session.task());
            session = session.with_agent_name(&agent.name());
            agent.run(&mut session);
            Ok(session.transcript())
        })
        .collect()
}

/// Ids of every task in the set, optionally restricted to one track.
pub fn task_ids(set: &TaskSet, track: Option<u8>) -> Vec<String> {
    set.tasks
        .iter()
        .filter(|t| track.is_none_or(|k| t.track == k))
        .map(|t| t.id.clone())
        .collect()
}
