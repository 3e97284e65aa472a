//! Template rendering of structured tasks into witness/agent dialogue.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{StepKind, Task};
use crate::rng::{derive, seeded, str_key};
use crate::schema::AttrValue;
use crate::witness::{fill_template, templates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Witness,
    Agent,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

impl Utterance {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        Utterance {
            speaker,
            text: text.into(),
        }
    }
}

/// Agent question for each attribute. Also used by agents to recognise
/// which attribute a dialogue turn is about.
pub const QUESTIONS: [(&str, &str); 24] = [
    ("body_features", "Anything distinctive about their build?"),
    ("body_shape", "What was their build like?"),
    ("eyewear_type", "Did they have glasses or sunglasses on?"),
    ("hair_color", "What color was their hair?"),
    ("hair_style", "How about their hairstyle?"),
    ("hair_visibility", "Could you see their hair?"),
    ("headwear_type", "Were they wearing anything on their head?"),
    ("items_held", "Were they holding anything?"),
    ("leg_visibility", "Could you see their legs clearly?"),
    ("lower_color_layout", "Were their pants plain or patterned?"),
    ("lower_fit_style", "How did their pants fit?"),
    ("lower_garment_color", "What color were their pants?"),
    ("lower_garment_type", "What were they wearing on the bottom?"),
    ("mask_state", "Were they wearing a mask?"),
    ("shoe_color", "What color were their shoes?"),
    ("shoe_type", "What kind of shoes did they have on?"),
    ("torso_bag_type", "Were they carrying a bag?"),
    ("upper_color_layout", "Was their top plain or patterned?"),
    ("upper_fit_style", "How did their top fit?"),
    ("upper_garment_color", "Can you tell me what color their top was?"),
    ("upper_garment_type", "What kind of top were they wearing?"),
    ("upper_state", "Anything notable about the top, like a hood or the sleeves?"),
    ("visual_age_style", "Roughly how old did they look?"),
    ("visual_gender", "Did they look male or female?"),
];

/// Noun phrase used in the opening clue sentence.
const CLUE_NOUNS: [(&str, &str); 24] = [
    ("body_features", "build"),
    ("body_shape", "build"),
    ("eyewear_type", "eyewear"),
    ("hair_color", "hair color"),
    ("hair_style", "hairstyle"),
    ("hair_visibility", "hair"),
    ("headwear_type", "headwear"),
    ("items_held", "hands"),
    ("leg_visibility", "legs"),
    ("lower_color_layout", "pants pattern"),
    ("lower_fit_style", "pants fit"),
    ("lower_garment_color", "pants"),
    ("lower_garment_type", "bottoms"),
    ("mask_state", "mask"),
    ("shoe_color", "shoe color"),
    ("shoe_type", "shoes"),
    ("torso_bag_type", "bag"),
    ("upper_color_layout", "top pattern"),
    ("upper_fit_style", "top fit"),
    ("upper_garment_color", "top"),
    ("upper_garment_type", "top"),
    ("upper_state", "top"),
    ("visual_age_style", "age"),
    ("visual_gender", "appearance"),
];

pub const TEMPORAL_QUESTION: &str = "Let me check who could have made it between those two spots in time.";

pub fn question_for(attr: &str) -> Option<&'static str> {
    QUESTIONS.iter().find(|(a, _)| *a == attr).map(|(_, q)| *q)
}

/// Inverse of `question_for`.
pub fn attribute_for_question(q: &str) -> Option<&'static str> {
    QUESTIONS.iter().find(|(_, x)| *x == q).map(|(a, _)| *a)
}

pub fn clue_sentence(attr: &str, value: &AttrValue) -> String {
    match attr {
        "upper_garment_color" => format!("I remember they were wearing a {value} top."),
        "lower_garment_color" => format!("I remember they were wearing {value} pants."),
        _ => {
            let noun = CLUE_NOUNS
                .iter()
                .find(|(a, _)| *a == attr)
                .map(|(_, n)| *n)
                .unwrap_or("look");
            format!("The first thing I noticed was their {noun}: {value}.")
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("negative time gap {0}")]
pub struct NegativeGap(pub f64);

/// Closed-open buckets: [0,30) [30,120) [120,300) [300,900) [900,inf).
pub const VAGUE_BUCKETS: [(f64, &str); 5] = [
    (30.0, "almost at the same time"),
    (120.0, "a moment later"),
    (300.0, "a few minutes later"),
    (900.0, "a while later"),
    (f64::INFINITY, "much later"),
];

pub fn vaguify_time(delta: f64) -> Result<&'static str, NegativeGap> {
    if !(delta >= 0.0) {
        return Err(NegativeGap(delta));
    }
    Ok(VAGUE_BUCKETS
        .iter()
        .find(|(hi, _)| delta < *hi)
        .map(|(_, p)| *p)
        .unwrap_or("much later"))
}

/// Template index stream for rendering one task.
pub fn render_rng(seed: u64, task_id: &str) -> crate::rng::Rng {
    seeded(derive(seed, &[0x7265_6e64, str_key(task_id)]))
}

/// Fill in step questions/answers and the dialogue. `opening` is the text
/// the witness says before any question.
pub fn render_dialogue(task: &mut Task, opening: String, seed: u64) {
    let tpl = templates();
    let mut rng = render_rng(seed, &task.id);
    let mut dialogue = vec![Utterance::new(Speaker::Witness, opening)];
    for step in &mut task.oracle_path {
        match step.kind {
            StepKind::Attribute => {
                let attr = step.attribute.as_deref().unwrap_or_default();
                let q = question_for(attr).unwrap_or("Can you tell me more?").to_string();
                let value = step.value.as_ref().map(|v| v.to_string()).unwrap_or_default();
                let i = rng.random_range(0..tpl.len());
                let a = fill_template(&tpl[i], &value);
                step.question = Some(q.clone());
                step.answer = Some(a.clone());
                dialogue.push(Utterance::new(Speaker::Agent, q));
                dialogue.push(Utterance::new(Speaker::Witness, a));
            }
            StepKind::Spatial => {
                let q = step.question.clone().unwrap_or_default();
                let a = step.answer.clone().unwrap_or_default();
                dialogue.push(Utterance::new(Speaker::Agent, q));
                dialogue.push(Utterance::new(Speaker::Witness, a));
            }
            StepKind::Temporal => {
                let a = format!(
                    "{} of {} candidates could have made that trip.",
                    step.candidates_after, step.candidates_before
                );
                step.question = Some(TEMPORAL_QUESTION.to_string());
                step.answer = Some(a.clone());
                dialogue.push(Utterance::new(Speaker::Agent, TEMPORAL_QUESTION));
                dialogue.push(Utterance::new(Speaker::System, a));
            }
        }
    }
    task.dialogue = dialogue;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        assert_eq!(vaguify_time(8.9), Ok("almost at the same time"));
        assert_eq!(vaguify_time(30.0), Ok("a moment later"));
        assert_eq!(vaguify_time(29.999), Ok("almost at the same time"));
        assert_eq!(vaguify_time(600.0), Ok("a while later"));
        assert_eq!(vaguify_time(5000.0), Ok("much later"));
        assert!(vaguify_time(-1.0).is_err());
    }

    #[test]
    fn question_table_is_invertible() {
        for (a, q) in QUESTIONS {
            assert_eq!(attribute_for_question(q), Some(a));
        }
        let s = crate::schema::AttributeSchema::default_schema();
        for n in s.names() {
            assert!(question_for(n).is_some(), "{n}");
        }
    }

    #[test]
    fn clue_sentences_hide_keys() {
        let s = clue_sentence("lower_garment_color", &AttrValue::single("Grey"));
        assert_eq!(s, "I remember they were wearing Grey pants.");
        assert!(!clue_sentence("shoe_type", &AttrValue::single("Boots/Walker")).contains("shoe_type"));
    }
}
