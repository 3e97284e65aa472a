//! Deterministic witness: answers attribute and spatial questions about the
//! target of one task.

use std::sync::OnceLock;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive, seeded, str_key, Rng};
use crate::schema::{AttrValue, AttributeSchema};
use crate::taskgen::{StepKind, Task};
use crate::world::PersonRecord;

pub const UNCERTAIN_REPLY: &str = "I'm not sure about that, I didn't get a good look.";
pub const SPATIAL_REFUSAL: &str = "I already told you everything I remember about where they were.";
pub const K3: [&str; 3] = ["visual_gender", "upper_garment_color", "lower_garment_color"];

static TEMPLATES: OnceLock<Vec<String>> = OnceLock::new();

/// The twelve answer templates, each with one `{value}` slot.
pub fn templates() -> &'static [String] {
    TEMPLATES.get_or_init(|| {
        serde_json::from_str(include_str!("../data/witness_templates.json")).expect("bundled templates parse")
    })
}

pub fn fill_template(template: &str, value: &str) -> String {
    template.replacen("{value}", value, 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessConfig {
    pub observable_set: Vec<String>,
    pub template_seed: u64,
    pub uncertain_reply: String,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            observable_set: K3.iter().map(|s| s.to_string()).collect(),
            template_seed: 42,
            uncertain_reply: UNCERTAIN_REPLY.to_string(),
        }
    }
}

impl WitnessConfig {
    pub fn check(&self, schema: &AttributeSchema) -> Result<(), WitnessError> {
        match self.observable_set.iter().find(|a| schema.get(a).is_none()) {
            Some(a) => Err(WitnessError::UnknownAttribute(a.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("spatial questions are only answered on Track 2 (this is Track {0})")]
    WrongTrack(u8),
    #[error("task has no spatial answer")]
    NoSpatialAnswer,
}

/// Which priority rule produced an attribute answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerRule {
    Path,
    Observable,
    Unobservable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialReply {
    pub text: String,
    /// False when the question was already answered and this is a refusal.
    pub informative: bool,
}

/// One witness per session.
#[derive(Debug, Clone)]
pub struct Witness<'a> {
    task: &'a Task,
    target: &'a PersonRecord,
    cfg: WitnessConfig,
    rng: Rng,
    spatial_used: bool,
    /// Observable attributes the witness could not answer because the
    /// gallery holds Uncertain for the target.
    pub uncertain_observables: Vec<String>,
}

impl<'a> Witness<'a> {
    pub fn new(task: &'a Task, target: &'a PersonRecord, cfg: WitnessConfig) -> Self {
        let rng = seeded(derive(cfg.template_seed, &[str_key(&task.id)]));
        Witness {
            task,
            target,
            cfg,
            rng,
            spatial_used: false,
            uncertain_observables: Vec::new(),
        }
    }

    pub fn respond_attribute(
        &mut self,
        schema: &AttributeSchema,
        attribute: &str,
    ) -> Result<(String, AnswerRule), WitnessError> {
        if schema.get(attribute).is_none() {
            return Err(WitnessError::UnknownAttribute(attribute.to_string()));
        }
        let on_path = self
            .task
            .oracle_path
            .iter()
            .find(|s| s.kind == StepKind::Attribute && s.attribute.as_deref() == Some(attribute));
        if let Some(answer) = on_path.and_then(|s| s.answer.clone()) {
            return Ok((answer, AnswerRule::Path));
        }
        if self.cfg.observable_set.iter().any(|a| a == attribute) {
            match self.target.attrs.get(attribute) {
                Some(v) if !v.is_uncertain() => {
                    let tpl = templates();
                    let i = self.rng.random_range(0..tpl.len());
                    return Ok((fill_template(&tpl[i], &v.to_string()), AnswerRule::Observable));
                }
                _ => self.uncertain_observables.push(attribute.to_string()),
            }
        }
        Ok((self.cfg.uncertain_reply.clone(), AnswerRule::Unobservable))
    }

    pub fn respond_spatial(&mut self) -> Result<SpatialReply, WitnessError> {
        if self.task.track != 2 {
            return Err(WitnessError::WrongTrack(self.task.track));
        }
        if self.spatial_used {
            return Ok(SpatialReply {
                text: SPATIAL_REFUSAL.to_string(),
                informative: false,
            });
        }
        let answer = self
            .task
            .oracle_path
            .iter()
            .find(|s| s.kind == StepKind::Spatial)
            .and_then(|s| s.answer.clone())
            .ok_or(WitnessError::NoSpatialAnswer)?;
        self.spatial_used = true;
        Ok(SpatialReply {
            text: answer,
            informative: true,
        })
    }

    pub fn spatial_used(&self) -> bool {
        self.spatial_used
    }
}

/// What the interpreter made of a witness answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ParsedAnswer {
    Value(AttrValue),
    Uncertain,
    ParseFailure,
}

/// Strip the template around the value slot when the text matches one.
fn template_slot(text: &str) -> Option<&str> {
    for t in templates() {
        let (pre, post) = t.split_once("{value}")?;
        if text.len() >= pre.len() + post.len() && text.starts_with(pre) && text.ends_with(post) {
            return Some(&text[pre.len()..text.len() - post.len()]);
        }
    }
    None
}

/// Canonical values of `attribute` appearing in `text`, longest first,
/// without overlapping spans. Case-insensitive.
fn scan_values<'s>(text: &str, values: &'s [String]) -> Vec<&'s str> {
    let lower = text.to_lowercase();
    let mut taken = vec![false; lower.len()];
    let mut sorted: Vec<&String> = values.iter().collect();
    sorted.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let mut out = Vec::new();
    for v in sorted {
        let needle = v.to_lowercase();
        let mut start = 0;
        while let Some(off) = lower[start..].find(&needle) {
            let i = start + off;
            let j = i + needle.len();
            if !taken[i..j].iter().any(|&x| x) {
                taken[i..j].iter_mut().for_each(|x| *x = true);
                out.push(v.as_str());
                break;
            }
            start = i + 1;
            while !lower.is_char_boundary(start) {
                start += 1;
            }
        }
    }
    out
}

pub fn parse_witness_response(text: &str, attribute: &str, schema: &AttributeSchema) -> ParsedAnswer {
    if text == UNCERTAIN_REPLY {
        return ParsedAnswer::Uncertain;
    }
    let Some(def) = schema.get(attribute) else {
        return ParsedAnswer::ParseFailure;
    };
    let values: Vec<String> = def
        .values
        .iter()
        .filter(|v| v.as_str() != crate::schema::UNCERTAIN)
        .cloned()
        .collect();
    let slot = template_slot(text).unwrap_or(text).trim();
    if let Some(v) = values.iter().find(|v| v.eq_ignore_ascii_case(slot)) {
        return ParsedAnswer::Value(if def.multi_select {
            AttrValue::multi([v.clone()])
        } else {
            AttrValue::single(v.clone())
        });
    }
    let found = scan_values(slot, &values);
    if found.is_empty() {
        return ParsedAnswer::ParseFailure;
    }
    if def.multi_select {
        ParsedAnswer::Value(AttrValue::multi(found))
    } else {
        ParsedAnswer::Value(AttrValue::single(found[0]))
    }
}
