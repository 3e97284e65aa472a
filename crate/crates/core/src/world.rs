//! Gallery persons, camera visits and the `World` file format.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{normalize_value, validate_schema, AttrValue, AttributeSchema, Attributes};

pub type PersonId = u32;
pub type CameraId = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub id: PersonId,
    pub attrs: Attributes,
}

impl PersonRecord {
    pub fn value(&self, attr: &str) -> Option<&AttrValue> {
        self.attrs.get(attr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub camera: CameraId,
    pub enter: f64,
    pub exit: f64,
}

impl Visit {
    pub fn new(camera: impl Into<String>, enter: f64, exit: f64) -> Self {
        Visit {
            camera: camera.into(),
            enter,
            exit,
        }
    }

    pub fn duration(&self) -> f64 {
        self.exit - self.enter
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub person: PersonId,
    pub visits: Vec<Visit>,
}

impl Trajectory {
    /// Merge consecutive same-camera visits separated by at most `frame_gap_s`
    /// (occlusion recovery). Longer gaps stay split and count as re-entries.
    pub fn merged(&self, frame_gap_s: f64) -> Trajectory {
        let mut visits: Vec<Visit> = Vec::with_capacity(self.visits.len());
        for v in &self.visits {
            if let Some(last) = visits.last_mut() {
                if last.camera == v.camera && v.enter - last.exit <= frame_gap_s {
                    last.exit = last.exit.max(v.exit);
                    continue;
                }
            }
            visits.push(v.clone());
        }
        Trajectory {
            person: self.person,
            visits,
        }
    }

    pub fn distinct_cameras(&self) -> BTreeSet<&str> {
        self.visits.iter().map(|v| v.camera.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub schema: AttributeSchema,
    pub gallery: Vec<PersonRecord>,
    pub trajectories: Vec<Trajectory>,
    pub cameras: Vec<CameraId>,
    pub topology_name: String,
    /// Scenario label used in task ids; empty when the file predates it.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub scenario: String,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

impl World {
    pub fn person(&self, id: PersonId) -> Option<&PersonRecord> {
        self.gallery.iter().find(|p| p.id == id)
    }

    pub fn person_index(&self) -> BTreeMap<PersonId, &PersonRecord> {
        self.gallery.iter().map(|p| (p.id, p)).collect()
    }

    pub fn trajectory(&self, id: PersonId) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.person == id)
    }

    /// Normalizes attribute strings in place (trim + whitespace collapse).
    pub fn normalize(&mut self) {
        for p in &mut self.gallery {
            for v in p.attrs.values_mut() {
                *v = match v {
                    AttrValue::Single(s) => AttrValue::Single(normalize_value(s)),
                    AttrValue::Multi(set) => {
                        AttrValue::Multi(set.iter().map(|s| normalize_value(s)).collect())
                    }
                };
            }
        }
    }

    /// Checks every world invariant, naming the first failure.
    pub fn validate(&self) -> Result<(), WorldError> {
        let violations = validate_schema(&self.schema);
        if let Some(v) = violations.first() {
            return Err(WorldError::SchemaViolation(v.to_string()));
        }
        let mut ids = BTreeSet::new();
        for p in &self.gallery {
            if !ids.insert(p.id) {
                return Err(WorldError::SchemaViolation(format!(
                    "person {} appears twice in gallery",
                    p.id
                )));
            }
            for def in &self.schema.attributes {
                let Some(v) = p.attrs.get(&def.name) else {
                    return Err(WorldError::SchemaViolation(format!(
                        "person {} missing attribute `{}`",
                        p.id, def.name
                    )));
                };
                if let Err(why) = self.schema.check_value(&def.name, v) {
                    return Err(WorldError::SchemaViolation(format!("person {}: {why}", p.id)));
                }
            }
            if let Some(extra) = p.attrs.keys().find(|k| self.schema.get(k).is_none()) {
                return Err(WorldError::SchemaViolation(format!(
                    "person {} has unknown attribute `{extra}`",
                    p.id
                )));
            }
        }
        let cams: BTreeSet<&str> = self.cameras.iter().map(String::as_str).collect();
        for t in &self.trajectories {
            if !ids.contains(&t.person) {
                return Err(WorldError::SchemaViolation(format!(
                    "trajectory for person {} not in gallery",
                    t.person
                )));
            }
            let mut prev_enter = f64::NEG_INFINITY;
            for v in &t.visits {
                if !cams.contains(v.camera.as_str()) {
                    return Err(WorldError::SchemaViolation(format!(
                        "person {} visits unknown camera `{}`",
                        t.person, v.camera
                    )));
                }
                if !(v.exit >= v.enter) {
                    return Err(WorldError::SchemaViolation(format!(
                        "person {} visit at {} exits before entering",
                        t.person, v.camera
                    )));
                }
                if v.enter < prev_enter {
                    return Err(WorldError::SchemaViolation(format!(
                        "person {} visits not sorted by enter time",
                        t.person
                    )));
                }
                prev_enter = v.enter;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<World, WorldError> {
        let mut w: World =
            serde_json::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
        w.normalize();
        w.validate()?;
        Ok(w)
    }

    /// Canonical JSON text: keys sorted, two-space indentation, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        crate::io::canonical_json(self)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), WorldError> {
        let path = path.as_ref();
        fs::write(path, self.to_canonical_json()).map_err(|source| WorldError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub fn load_world(path: impl AsRef<Path>) -> Result<World, WorldError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: path.display().to_string(),
        source,
    })?;
    World::from_json(&text)
}

/// Camera ids `c01`..`cNN`.
pub fn camera_ids(n: usize) -> Vec<CameraId> {
    (1..=n).map(|i| format!("c{i:02}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_attrs(schema: &AttributeSchema) -> Attributes {
        schema
            .attributes
            .iter()
            .map(|d| {
                let v = if d.multi_select {
                    AttrValue::multi([d.values[0].clone()])
                } else {
                    AttrValue::single(d.values[0].clone())
                };
                (d.name.clone(), v)
            })
            .collect()
    }

    fn tiny_world() -> World {
        let schema = AttributeSchema::default_schema();
        let attrs = base_attrs(&schema);
        World {
            schema,
            gallery: vec![PersonRecord { id: 7, attrs }],
            trajectories: vec![Trajectory {
                person: 7,
                visits: vec![Visit::new("c01", 0.0, 5.0), Visit::new("c02", 6.0, 9.0)],
            }],
            cameras: camera_ids(16),
            topology_name: "factory".into(),
            scenario: String::new(),
        }
    }

    #[test]
    fn empty_world_is_valid() {
        let w = World {
            gallery: vec![],
            trajectories: vec![],
            ..tiny_world()
        };
        let back = World::from_json(&w.to_canonical_json()).unwrap();
        assert_eq!(back.gallery.len(), 0);
    }

    #[test]
    fn missing_attribute_names_person_and_attribute() {
        let mut w = tiny_world();
        w.gallery[0].attrs.remove("hair_color");
        let err = World::from_json(&w.to_canonical_json()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("person 7"), "{msg}");
        assert!(msg.contains("hair_color"), "{msg}");
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(World::from_json("{not json"), Err(WorldError::Parse(_))));
    }

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let w = tiny_world();
        let a = w.to_canonical_json();
        let b = World::from_json(&a).unwrap().to_canonical_json();
        assert_eq!(a, b);
    }

    #[test]
    fn whitespace_in_values_is_normalized() {
        let w = tiny_world();
        let text = w
            .to_canonical_json()
            .replacen("\"Sneakers\"", "\"  Sneakers \"", 1);
        let back = World::from_json(&text).unwrap();
        assert_eq!(back.gallery[0].attrs["shoe_type"], AttrValue::single("Sneakers"));
    }

    #[test]
    fn unknown_camera_rejected() {
        let mut w = tiny_world();
        w.trajectories[0].visits[1].camera = "c99".into();
        assert!(w.validate().is_err());
    }

    #[test]
    fn merge_respects_frame_gap() {
        let t = Trajectory {
            person: 1,
            visits: vec![
                Visit::new("c01", 0.0, 10.0),
                Visit::new("c01", 12.0, 20.0),
                Visit::new("c01", 30.0, 35.0),
            ],
        };
        let m = t.merged(4.3);
        assert_eq!(m.visits.len(), 2);
        assert_eq!(m.visits[0].exit, 20.0);
    }
}
