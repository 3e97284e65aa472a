//! Camera-network configurations: declared edge pairs, travel priors, zone
//! names and the spatial disambiguation trees used by Track 2.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::CameraId;

const FACTORY_JSON: &str = include_str!("../data/topologies/factory.json");
const UNIVERSITY_JSON: &str = include_str!("../data/topologies/university.json");

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("unknown topology `{0}` (expected factory or university)")]
    UnknownTopology(String),
    #[error("invalid topology config: {0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub id: CameraId,
    /// Natural-language description of the area the camera covers.
    pub sub_area: String,
}

/// Ground-truth prior for a distant camera pair, used by the world generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelPrior {
    pub a: CameraId,
    pub b: CameraId,
    pub median_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDecl {
    pub id: String,
    pub name: String,
    /// Phrase used in dialogue, e.g. "the warehouse area".
    pub phrase: String,
    pub cameras: Vec<CameraId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneBranch {
    /// Short phrase the agent can look for in the witness answer.
    pub label: String,
    /// Witness answer locating the person in this sub-area.
    pub answer: String,
    pub cameras: Vec<CameraId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTree {
    pub zone: String,
    pub question: String,
    pub branches: Vec<ZoneBranch>,
}

impl ZoneTree {
    pub fn branch_of(&self, camera: &str) -> Option<&ZoneBranch> {
        self.branches
            .iter()
            .find(|b| b.cameras.iter().any(|c| c == camera))
    }

    /// Branch whose label occurs in `answer` (case-insensitive); longest label wins.
    pub fn match_answer(&self, answer: &str) -> Option<&ZoneBranch> {
        let lower = answer.to_lowercase();
        self.branches
            .iter()
            .filter(|b| lower.contains(&b.label.to_lowercase()))
            .max_by_key(|b| b.label.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub name: String,
    pub cameras: Vec<CameraSpec>,
    pub overlap_pairs: Vec<(CameraId, CameraId)>,
    pub soft_pairs: Vec<(CameraId, CameraId)>,
    pub travel: Vec<TravelPrior>,
    pub zones: Vec<ZoneDecl>,
    pub composite_zones: Vec<ZoneDecl>,
    pub zone_trees: Vec<ZoneTree>,
}

/// Unordered camera pair key.
pub fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub type PairSet = BTreeSet<(String, String)>;

pub fn pair_set(pairs: &[(CameraId, CameraId)]) -> PairSet {
    pairs.iter().map(|(a, b)| pair_key(a, b)).collect()
}

impl Topology {
    pub fn factory() -> Topology {
        serde_json::from_str(FACTORY_JSON).expect("shipped factory topology parses")
    }

    pub fn university() -> Topology {
        serde_json::from_str(UNIVERSITY_JSON).expect("shipped university topology parses")
    }

    pub fn by_name(name: &str) -> Result<Topology, TopologyError> {
        match name {
            "factory" => Ok(Topology::factory()),
            "university" => Ok(Topology::university()),
            other => Err(TopologyError::UnknownTopology(other.to_string())),
        }
    }

    /// A shipped topology by name, or a topology file when `spec` ends in `.json`.
    pub fn resolve(spec: &str) -> Result<Topology, TopologyError> {
        if spec.ends_with(".json") {
            Topology::load(spec)
        } else {
            Topology::by_name(spec)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let t: Topology =
            serde_json::from_str(&text).map_err(|e| TopologyError::Invalid(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    pub fn camera_ids(&self) -> Vec<CameraId> {
        self.cameras.iter().map(|c| c.id.clone()).collect()
    }

    pub fn sub_area(&self, camera: &str) -> Option<&str> {
        self.cameras
            .iter()
            .find(|c| c.id == camera)
            .map(|c| c.sub_area.as_str())
    }

    pub fn overlap_set(&self) -> PairSet {
        pair_set(&self.overlap_pairs)
    }

    pub fn soft_set(&self) -> PairSet {
        pair_set(&self.soft_pairs)
    }

    pub fn travel_prior(&self, a: &str, b: &str) -> Option<f64> {
        let key = pair_key(a, b);
        self.travel
            .iter()
            .find(|t| pair_key(&t.a, &t.b) == key)
            .map(|t| t.median_s)
    }

    /// Every camera reachable in one move from `cam`, sorted.
    pub fn neighbors(&self, cam: &str) -> Vec<CameraId> {
        let mut out = BTreeSet::new();
        for (a, b) in self.overlap_pairs.iter().chain(self.soft_pairs.iter()) {
            if a == cam {
                out.insert(b.clone());
            } else if b == cam {
                out.insert(a.clone());
            }
        }
        for t in &self.travel {
            if t.a == cam {
                out.insert(t.b.clone());
            } else if t.b == cam {
                out.insert(t.a.clone());
            }
        }
        out.into_iter().collect()
    }

    /// All declared directed camera pairs (both directions of every pair).
    pub fn declared_directed(&self) -> Vec<(CameraId, CameraId)> {
        let mut out = BTreeSet::new();
        let undirected = self
            .overlap_pairs
            .iter()
            .cloned()
            .chain(self.soft_pairs.iter().cloned())
            .chain(self.travel.iter().map(|t| (t.a.clone(), t.b.clone())));
        for (a, b) in undirected {
            out.insert((a.clone(), b.clone()));
            out.insert((b, a));
        }
        out.into_iter().collect()
    }

    pub fn zone_tree(&self, zone_id: &str) -> Option<&ZoneTree> {
        self.zone_trees.iter().find(|t| t.zone == zone_id)
    }

    /// Structural checks: camera references resolve and pair classes are disjoint.
    pub fn check(&self) -> Result<(), TopologyError> {
        let cams: BTreeSet<&str> = self.cameras.iter().map(|c| c.id.as_str()).collect();
        let mut seen = BTreeSet::new();
        let all = self
            .overlap_pairs
            .iter()
            .map(|(a, b)| (a, b, "overlap"))
            .chain(self.soft_pairs.iter().map(|(a, b)| (a, b, "soft")))
            .chain(self.travel.iter().map(|t| (&t.a, &t.b, "travel")));
        for (a, b, kind) in all {
            for c in [a, b] {
                if !cams.contains(c.as_str()) {
                    return Err(TopologyError::Invalid(format!(
                        "{kind} pair references unknown camera `{c}`"
                    )));
                }
            }
            if a == b {
                return Err(TopologyError::Invalid(format!("{kind} pair `{a}`-`{b}` is a loop")));
            }
            if !seen.insert(pair_key(a, b)) {
                return Err(TopologyError::Invalid(format!(
                    "pair `{a}`-`{b}` declared more than once"
                )));
            }
        }
        for t in &self.travel {
            if !(t.median_s > 0.0) {
                return Err(TopologyError::Invalid(format!(
                    "travel prior {}-{} must be positive",
                    t.a, t.b
                )));
            }
        }
        for tree in &self.zone_trees {
            let decl = self
                .zones
                .iter()
                .find(|z| z.id == tree.zone)
                .ok_or_else(|| TopologyError::Invalid(format!("tree for unknown zone {}", tree.zone)))?;
            let mut covered: Vec<&str> = tree
                .branches
                .iter()
                .flat_map(|b| b.cameras.iter().map(String::as_str))
                .collect();
            covered.sort();
            let mut want: Vec<&str> = decl.cameras.iter().map(String::as_str).collect();
            want.sort();
            if covered != want {
                return Err(TopologyError::Invalid(format!(
                    "tree for {} does not partition its cameras",
                    tree.zone
                )));
            }
        }
        Ok(())
    }
}
