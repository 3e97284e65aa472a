//! Spatio-temporal topology graph: transitions, labeling, edge statistics,
//! zones and temporal feasibility.

pub mod feasibility;
pub mod label;
pub mod stats;
pub mod transitions;
pub mod zones;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use feasibility::{classify_feasibility, verdict_from_gap, Classification, ImpossibleReason, Verdict};
pub use label::{compute_soft_adj_thresholds, label_transition, LabelContext, LabeledTransition, Reason, Status};
pub use transitions::{extract_transitions, TransitionKey, TransitionRecord, DEFAULT_FRAME_GAP_S};
pub use zones::{build_zones, Zone, ZoneKind};

use crate::topology::{pair_key, PairSet, Topology, ZoneTree};
use crate::world::{CameraId, World};

#[derive(Debug, Error)]
pub enum SttgError {
    #[error("edge {from}->{to} violates t_min <= t_med <= t_max ({t_min}, {t_med}, {t_max})")]
    StatViolation {
        from: String,
        to: String,
        t_min: f64,
        t_med: f64,
        t_max: f64,
    },
    #[error("world topology `{world}` does not match config `{config}`")]
    TopologyMismatch { world: String, config: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeType {
    Overlap,
    SoftAdj,
    Travel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub from: CameraId,
    pub to: CameraId,
    #[serde(rename = "type")]
    pub edge_type: EdgeType,
    pub t_min: f64,
    pub t_med: f64,
    pub t_max: f64,
    pub t_mean: f64,
    pub t_std: f64,
    pub n: u32,
}

impl EdgeStats {
    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }

    /// Summary statistics of a non-empty sample of transit times.
    pub fn from_sample(from: &str, to: &str, edge_type: EdgeType, sample: &[f64]) -> EdgeStats {
        let sorted = stats::sorted_copy(sample);
        EdgeStats {
            from: from.to_string(),
            to: to.to_string(),
            edge_type,
            t_min: sorted[0],
            t_med: stats::median_sorted(&sorted),
            t_max: sorted[sorted.len() - 1],
            t_mean: stats::mean(&sorted),
            t_std: stats::std_pop(&sorted),
            n: sorted.len() as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub camera: CameraId,
    pub zone: String,
    pub sub_area: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sttg {
    pub topology_name: String,
    pub nodes: Vec<Node>,
    /// Sorted by (from, to).
    pub edges: Vec<EdgeStats>,
    pub zones: Vec<Zone>,
    pub composite_zones: Vec<Zone>,
    /// Spatial question trees carried along so task generation needs only
    /// the world and this graph.
    pub zone_trees: Vec<ZoneTree>,
}

/// Edge type for an unordered pair: OVERLAP > SOFT_ADJ > TRAVEL.
pub fn edge_type_of(from: &str, to: &str, overlap: &PairSet, soft: &PairSet) -> EdgeType {
    if from == to {
        return EdgeType::Travel;
    }
    let k = pair_key(from, to);
    if overlap.contains(&k) {
        EdgeType::Overlap
    } else if soft.contains(&k) {
        EdgeType::SoftAdj
    } else {
        EdgeType::Travel
    }
}

/// One `EdgeStats` per directed pair present in `trusted`, sorted by pair.
pub fn aggregate_edges(
    trusted: &[TransitionRecord],
    overlap: &PairSet,
    soft: &PairSet,
) -> Result<Vec<EdgeStats>, SttgError> {
    let mut by_pair: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for t in trusted {
        by_pair
            .entry((t.from_cam.as_str(), t.to_cam.as_str()))
            .or_default()
            .push(t.transit);
    }
    let mut out = Vec::with_capacity(by_pair.len());
    for ((from, to), sample) in by_pair {
        let e = EdgeStats::from_sample(from, to, edge_type_of(from, to, overlap, soft), &sample);
        if !(e.t_min <= e.t_med && e.t_med <= e.t_max) {
            return Err(SttgError::StatViolation {
                from: e.from,
                to: e.to,
                t_min: e.t_min,
                t_med: e.t_med,
                t_max: e.t_max,
            });
        }
        out.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    pub frame_gap_s: f64,
    /// Non-default: also aggregate WARN transitions.
    pub include_warn: bool,
    pub manual_errors: BTreeSet<TransitionKey>,
    pub simultaneous: BTreeSet<TransitionKey>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            frame_gap_s: DEFAULT_FRAME_GAP_S,
            include_warn: false,
            manual_errors: BTreeSet::new(),
            simultaneous: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub transitions: usize,
    pub by_status: BTreeMap<Status, usize>,
    pub by_reason: BTreeMap<Reason, usize>,
    pub thresholds: BTreeMap<String, f64>,
}

pub fn build_sttg(world: &World, topo: &Topology, cfg: &BuildConfig) -> Result<(Sttg, BuildReport), SttgError> {
    if world.topology_name != topo.name {
        return Err(SttgError::TopologyMismatch {
            world: world.topology_name.clone(),
            config: topo.name.clone(),
        });
    }
    let overlap = topo.overlap_set();
    let soft = topo.soft_set();
    let records = extract_transitions(&world.trajectories, cfg.frame_gap_s);
    let thresholds = compute_soft_adj_thresholds(&records, &soft);
    let ctx = LabelContext {
        manual_errors: cfg.manual_errors.clone(),
        simultaneous: cfg.simultaneous.clone(),
        overlap_pairs: overlap.clone(),
        soft_pairs: soft.clone(),
        thresholds: thresholds.clone(),
    };
    let mut report = BuildReport {
        transitions: records.len(),
        thresholds: thresholds
            .iter()
            .map(|((a, b), v)| (format!("{a}-{b}"), *v))
            .collect(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for r in &records {
        let (status, reason) = label_transition(r, &ctx);
        *report.by_status.entry(status).or_default() += 1;
        *report.by_reason.entry(reason).or_default() += 1;
        if status == Status::Trust || (cfg.include_warn && status == Status::Warn) {
            kept.push(r.clone());
        }
    }
    let edges = aggregate_edges(&kept, &overlap, &soft)?;
    let cameras = world.cameras.clone();
    let (zones, composite_zones) = build_zones(&cameras, &overlap, &soft, &topo.zones, &topo.composite_zones);
    let nodes = cameras
        .iter()
        .map(|c| Node {
            camera: c.clone(),
            zone: zones
                .iter()
                .find(|z| z.contains(c))
                .map(|z| z.id.clone())
                .unwrap_or_default(),
            sub_area: topo.sub_area(c).unwrap_or_default().to_string(),
        })
        .collect();
    let zone_ids: BTreeSet<&str> = zones.iter().map(|z| z.id.as_str()).collect();
    let zone_trees = topo
        .zone_trees
        .iter()
        .filter(|t| zone_ids.contains(t.zone.as_str()))
        .cloned()
        .collect();
    Ok((
        Sttg {
            topology_name: topo.name.clone(),
            nodes,
            edges,
            zones,
            composite_zones,
            zone_trees,
        },
        report,
    ))
}

impl Sttg {
    pub fn edge(&self, from: &str, to: &str) -> Option<&EdgeStats> {
        self.edges
            .binary_search_by(|e| (e.from.as_str(), e.to.as_str()).cmp(&(from, to)))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn zone_of(&self, camera: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.contains(camera))
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn zone_tree(&self, zone_id: &str) -> Option<&ZoneTree> {
        self.zone_trees.iter().find(|t| t.zone == zone_id)
    }

    pub fn sub_area(&self, camera: &str) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| n.camera == camera)
            .map(|n| n.sub_area.as_str())
    }

    pub fn count_by_type(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for e in &self.edges {
            let k = if e.is_self_loop() {
                "self_loop"
            } else {
                match e.edge_type {
                    EdgeType::Overlap => "OVERLAP",
                    EdgeType::SoftAdj => "SOFT_ADJ",
                    EdgeType::Travel => "TRAVEL",
                }
            };
            *m.entry(k).or_default() += 1;
        }
        m
    }

    pub fn to_canonical_json(&self) -> String {
        crate::io::canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Sttg, SttgError> {
        let mut s: Sttg = serde_json::from_str(text).map_err(|e| SttgError::Parse(e.to_string()))?;
        s.edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Sttg, SttgError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SttgError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Sttg::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SttgError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_canonical_json()).map_err(|source| SttgError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Graphviz rendering; one cluster per atomic zone.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph sttg {\n  rankdir=LR;\n");
        for (i, z) in self.zones.iter().enumerate() {
            let _ = writeln!(s, "  subgraph cluster_{i} {{\n    label=\"{}\";", z.name);
            for c in &z.cameras {
                let _ = writeln!(s, "    \"{c}\";");
            }
            s.push_str("  }\n");
        }
        for e in &self.edges {
            let color = match e.edge_type {
                EdgeType::Overlap => "blue",
                EdgeType::SoftAdj => "orange",
                EdgeType::Travel => "gray",
            };
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [color={color}, label=\"{:.1}s n={}\"];",
                e.from, e.to, e.t_med, e.n
            );
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(from: &str, to: &str, transit: f64) -> TransitionRecord {
        TransitionRecord {
            person: 0,
            seq: 0,
            from_cam: from.into(),
            to_cam: to.into(),
            exit_time: 0.0,
            enter_time: transit,
            transit,
            duration_prev: 5.0,
        }
    }

    #[test]
    fn worked_edge_statistics() {
        let t = Topology::factory();
        let recs = vec![rec("c05", "c08", 20.7), rec("c05", "c08", 7.6), rec("c05", "c08", 11.2)];
        let e = aggregate_edges(&recs, &t.overlap_set(), &t.soft_set()).unwrap();
        assert_eq!(e.len(), 1);
        let e = &e[0];
        assert_eq!((e.t_min, e.t_med, e.t_max, e.n), (7.6, 11.2, 20.7, 3));
        assert_eq!(e.edge_type, EdgeType::Travel);
    }

    #[test]
    fn single_sample_and_types() {
        let t = Topology::factory();
        let recs = vec![rec("c01", "c02", 5.0), rec("c13", "c14", 1.0), rec("c03", "c03", 8.0)];
        let e = aggregate_edges(&recs, &t.overlap_set(), &t.soft_set()).unwrap();
        assert_eq!(e[0].edge_type, EdgeType::Overlap);
        assert_eq!((e[0].t_min, e[0].t_med, e[0].t_max, e[0].t_std), (5.0, 5.0, 5.0, 0.0));
        assert!(e[1].is_self_loop());
        assert_eq!(e[2].edge_type, EdgeType::SoftAdj);
    }
}
