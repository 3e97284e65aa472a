//! Seeded synthetic worlds over the shipped topologies.
//!
//! All randomness comes from ChaCha8 streams derived from the config seed, so
//! a (config, seed) pair yields the same world on every platform.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Normal, Triangular};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive, seeded, Rng};
use crate::schema::{AttrValue, AttributeSchema, Attributes, NONE_VALUE, UNCERTAIN};
use crate::topology::{pair_key, Topology, TopologyError};
use crate::world::{PersonId, PersonRecord, Trajectory, Visit, World};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("insufficient transitions: wanted {wanted} {kind}, only {available} eligible persons")]
    InsufficientTransitions {
        kind: &'static str,
        wanted: usize,
        available: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTimeModel {
    Lognormal,
    Triangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenConfig {
    pub topology: String,
    pub n_persons: usize,
    pub seed: u64,
    /// Optional per-attribute value weights; missing values get weight 0.
    pub attr_marginals: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    pub mean_cams_per_person: f64,
    pub uncertain_rate: f64,
    pub edge_time_model: EdgeTimeModel,
    /// Scenario label used in task ids; defaults to `s{seed}`.
    pub scenario: Option<String>,
    /// Person start times are spread uniformly over this many seconds.
    pub horizon_s: f64,
    /// Number of shared outfits (work uniforms); 0 draws every attribute
    /// independently.
    pub outfits: usize,
    /// Probability that a definite attribute is copied from the person's outfit.
    pub outfit_share: f64,
}

impl Default for WorldGenConfig {
    fn default() -> Self {
        WorldGenConfig {
            topology: "factory".into(),
            n_persons: 150,
            seed: 0,
            attr_marginals: None,
            mean_cams_per_person: 5.9,
            uncertain_rate: 0.0117,
            edge_time_model: EdgeTimeModel::Lognormal,
            scenario: None,
            horizon_s: 1200.0,
            outfits: OUTFITS,
            outfit_share: OUTFIT_SHARE,
        }
    }
}

impl WorldGenConfig {
    pub fn new(topology: &str, n_persons: usize, seed: u64) -> Self {
        WorldGenConfig {
            topology: topology.into(),
            n_persons,
            seed,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<(), SynthError> {
        if self.n_persons == 0 {
            return Err(SynthError::Config("n_persons must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.uncertain_rate) {
            return Err(SynthError::Config("uncertain_rate must lie in [0, 1]".into()));
        }
        if !(3.0..=16.0).contains(&self.mean_cams_per_person) {
            return Err(SynthError::Config("mean_cams_per_person must lie in [3, 16]".into()));
        }
        if !(0.0..=1.0).contains(&self.outfit_share) {
            return Err(SynthError::Config("outfit_share must lie in [0, 1]".into()));
        }
        if !(self.horizon_s >= 0.0) {
            return Err(SynthError::Config("horizon_s must be non-negative".into()));
        }
        Ok(())
    }
}

const OUTFITS: usize = 0;
const OUTFIT_SHARE: f64 = 0.7;

/// Geometric weight ratio between consecutive canonical values.
const VALUE_DECAY: f64 = 0.55;
const REENTRY_P: f64 = 0.08;
const MAX_VISITS: usize = 24;
const LOGNORMAL_SIGMA: f64 = 0.25;

/// Support of the travel-time prior for a pair with the given median.
pub fn travel_support(model: EdgeTimeModel, median: f64) -> (f64, f64) {
    match model {
        EdgeTimeModel::Lognormal => (0.5 * median, 2.0 * median),
        EdgeTimeModel::Triangular => (0.6 * median, 1.8 * median),
    }
}

pub fn sample_travel_time(model: EdgeTimeModel, median: f64, rng: &mut Rng) -> f64 {
    let (lo, hi) = travel_support(model, median);
    match model {
        EdgeTimeModel::Lognormal => {
            let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
            (median * (LOGNORMAL_SIGMA * z).exp()).clamp(lo, hi)
        }
        EdgeTimeModel::Triangular => {
            // Mode placed so that the distribution median equals `median`.
            let tri = Triangular::new(lo, hi, triangular_mode_for_median(lo, hi, median)).unwrap();
            tri.sample(rng)
        }
    }
}

fn triangular_mode_for_median(lo: f64, hi: f64, median: f64) -> f64 {
    // For mode c >= median: (median-lo)^2 = 0.5 (hi-lo)(c-lo).
    let c = lo + 2.0 * (median - lo).powi(2) / (hi - lo);
    c.clamp(lo, hi)
}

fn sample_value(rng: &mut Rng, values: &[String], weights: &[f64]) -> String {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (v, w) in values.iter().zip(weights) {
        if x < *w {
            return v.clone();
        }
        x -= w;
    }
    values.last().cloned().unwrap_or_default()
}

fn value_weights(
    name: &str,
    values: &[String],
    marginals: Option<&BTreeMap<String, BTreeMap<String, f64>>>,
) -> Vec<f64> {
    if let Some(m) = marginals.and_then(|m| m.get(name)) {
        return values.iter().map(|v| m.get(v).copied().unwrap_or(0.0)).collect();
    }
    (0..values.len()).map(|k| VALUE_DECAY.powi(k as i32)).collect()
}

pub fn sample_attributes(
    schema: &AttributeSchema,
    rng: &mut Rng,
    uncertain_rate: f64,
    marginals: Option<&BTreeMap<String, BTreeMap<String, f64>>>,
) -> Attributes {
    let mut attrs = Attributes::new();
    for def in &schema.attributes {
        let values: Vec<String> = def.values.iter().filter(|v| *v != UNCERTAIN).cloned().collect();
        let weights = value_weights(&def.name, &values, marginals);
        let value = if rng.random::<f64>() < uncertain_rate {
            AttrValue::uncertain()
        } else if def.multi_select {
            let first = sample_value(rng, &values, &weights);
            let mut set = BTreeSet::from([first.clone()]);
            if first != NONE_VALUE && rng.random::<f64>() < 0.25 {
                let second = sample_value(rng, &values, &weights);
                if second != NONE_VALUE {
                    set.insert(second);
                }
            }
            AttrValue::Multi(set)
        } else {
            AttrValue::Single(sample_value(rng, &values, &weights))
        };
        attrs.insert(def.name.clone(), value);
    }
    attrs
}

/// Kind of move between two cameras of a topology.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    Overlap,
    Soft,
    Travel(f64),
}

struct Graph {
    cams: Vec<String>,
    adj: BTreeMap<String, Vec<(String, Move)>>,
}

impl Graph {
    fn new(topo: &Topology) -> Graph {
        let mut adj: BTreeMap<String, Vec<(String, Move)>> = BTreeMap::new();
        let mut add = |a: &str, b: &str, m: Move| {
            adj.entry(a.to_string()).or_default().push((b.to_string(), m));
            adj.entry(b.to_string()).or_default().push((a.to_string(), m));
        };
        for (a, b) in &topo.overlap_pairs {
            add(a, b, Move::Overlap);
        }
        for (a, b) in &topo.soft_pairs {
            add(a, b, Move::Soft);
        }
        for t in &topo.travel {
            add(&t.a, &t.b, Move::Travel(t.median_s));
        }
        for v in adj.values_mut() {
            v.sort_by(|x, y| x.0.cmp(&y.0));
        }
        Graph {
            cams: topo.camera_ids(),
            adj,
        }
    }
}

fn transit_for(m: Move, model: EdgeTimeModel, rng: &mut Rng) -> f64 {
    match m {
        Move::Overlap => rng.random_range(-2.0..1.0),
        Move::Soft => {
            if rng.random::<f64>() < 0.1 {
                -rng.random_range(0.1..0.8)
            } else {
                rng.random_range(0.4..4.0)
            }
        }
        Move::Travel(median) => sample_travel_time(model, median, rng),
    }
}

fn walk(graph: &Graph, cfg: &WorldGenConfig, rng: &mut Rng) -> Vec<Visit> {
    let p = ((cfg.mean_cams_per_person - 3.0) / 10.0).clamp(0.0, 1.0);
    let k = (3 + Binomial::new(10, p).unwrap().sample(rng) as usize).min(graph.cams.len());
    let mut cam = graph.cams[rng.random_range(0..graph.cams.len())].clone();
    let mut t = rng.random::<f64>() * cfg.horizon_s;
    let mut visits = Vec::new();
    let mut seen = BTreeSet::new();
    loop {
        let dwell = rng.random_range(3.0..45.0);
        visits.push(Visit::new(cam.clone(), t, t + dwell));
        seen.insert(cam.clone());
        t += dwell;
        if seen.len() >= k || visits.len() >= MAX_VISITS {
            break;
        }
        if rng.random::<f64>() < REENTRY_P {
            t += rng.random_range(5.0..30.0);
            continue;
        }
        let opts = &graph.adj[&cam];
        let weights: Vec<f64> = opts
            .iter()
            .map(|(c, m)| {
                let base = if matches!(m, Move::Travel(_)) { 1.0 } else { 3.0 };
                if seen.contains(c) {
                    base * 0.5
                } else {
                    base
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = opts.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                pick = i;
                break;
            }
            x -= w;
        }
        let (next, m) = opts[pick].clone();
        t += transit_for(m, cfg.edge_time_model, rng);
        cam = next;
    }
    visits
}

/// Deterministic world for `(cfg, cfg.seed)`.
pub fn generate_world(cfg: &WorldGenConfig) -> Result<World, SynthError> {
    cfg.check()?;
    let topo = Topology::resolve(&cfg.topology)?;
    let schema = AttributeSchema::default_schema();
    let graph = Graph::new(&topo);
    let outfits: Vec<Attributes> = (0..cfg.outfits)
        .map(|k| {
            let mut orng = seeded(derive(cfg.seed, &[3, k as u64]));
            sample_attributes(&schema, &mut orng, 0.0, cfg.attr_marginals.as_ref())
        })
        .collect();
    let mut gallery = Vec::with_capacity(cfg.n_persons);
    let mut trajectories = Vec::with_capacity(cfg.n_persons);
    for i in 0..cfg.n_persons {
        let id = (i + 1) as PersonId;
        let mut arng = seeded(derive(cfg.seed, &[1, id as u64]));
        let mut attrs = sample_attributes(&schema, &mut arng, cfg.uncertain_rate, cfg.attr_marginals.as_ref());
        if !outfits.is_empty() {
            let outfit = &outfits[arng.random_range(0..outfits.len())];
            for (name, v) in attrs.iter_mut() {
                if arng.random::<f64>() < cfg.outfit_share && !v.is_uncertain() {
                    *v = outfit[name].clone();
                }
            }
        }
        gallery.push(PersonRecord { id, attrs });
        let mut trng = seeded(derive(cfg.seed, &[2, id as u64]));
        trajectories.push(Trajectory {
            person: id,
            visits: walk(&graph, cfg, &mut trng),
        });
    }
    let world = World {
        schema,
        gallery,
        trajectories,
        cameras: topo.camera_ids(),
        topology_name: topo.name.clone(),
        scenario: cfg.scenario.clone().unwrap_or_else(|| format!("s{}", cfg.seed)),
    };
    debug_assert!(world.validate().is_ok());
    Ok(world)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub n_time_reversals: usize,
    pub n_slow_transits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub person: PersonId,
    /// The pair a reference sighting would use: first camera, then second.
    pub c1: String,
    pub c2: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub time_reversals: Vec<Injection>,
    pub slow_transits: Vec<Injection>,
}

fn unique_camera(visits: &[Visit], cam: &str) -> bool {
    visits.iter().filter(|v| v.camera == cam).count() == 1
}

fn is_declared(topo: &Topology, a: &str, b: &str) -> bool {
    let k = pair_key(a, b);
    topo.overlap_set().contains(&k) || topo.soft_set().contains(&k) || topo.travel_prior(a, b).is_some()
}

/// Last two visits A, B on a travel pair, both cameras visited once, and
/// the visit before A (if any) adjacent to B so the swap stays on declared
/// pairs.
fn reversal_site(topo: &Topology, t: &Trajectory) -> Option<(String, String)> {
    let n = t.visits.len();
    if n < 2 {
        return None;
    }
    let (a, b) = (&t.visits[n - 2], &t.visits[n - 1]);
    if a.camera == b.camera || topo.travel_prior(&a.camera, &b.camera).is_none() {
        return None;
    }
    if !unique_camera(&t.visits, &a.camera) || !unique_camera(&t.visits, &b.camera) {
        return None;
    }
    if n >= 3 && !is_declared(topo, &t.visits[n - 3].camera, &b.camera) {
        return None;
    }
    Some((a.camera.clone(), b.camera.clone()))
}

/// Consecutive visits A, M, B with A-B a travel pair and A, B visited once.
fn slow_site(topo: &Topology, t: &Trajectory) -> Option<(usize, String, String)> {
    for i in (0..t.visits.len().saturating_sub(2)).rev() {
        let (a, m, b) = (&t.visits[i], &t.visits[i + 1], &t.visits[i + 2]);
        if a.camera == b.camera || m.camera == a.camera || m.camera == b.camera {
            continue;
        }
        if topo.travel_prior(&a.camera, &b.camera).is_none() {
            continue;
        }
        if unique_camera(&t.visits, &a.camera) && unique_camera(&t.visits, &b.camera) {
            return Some((i, a.camera.clone(), b.camera.clone()));
        }
    }
    None
}

/// Perturb chosen persons so that they become genuine TIME_REVERSAL or
/// TOO_SLOW candidates for the returned camera pairs. A person is used at
/// most once.
pub fn inject_anomalies(
    world: &World,
    spec: AnomalySpec,
    seed: u64,
) -> Result<(World, InjectionReport), SynthError> {
    let topo = Topology::by_name(&world.topology_name)?;
    let mut out = world.clone();
    let mut report = InjectionReport::default();
    if spec.n_time_reversals == 0 && spec.n_slow_transits == 0 {
        return Ok((out, report));
    }
    let mut order: Vec<usize> = (0..out.trajectories.len()).collect();
    order.shuffle(&mut seeded(derive(seed, &[3])));
    let mut used = BTreeSet::new();

    let rev: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| reversal_site(&topo, &out.trajectories[i]).is_some())
        .take(spec.n_time_reversals)
        .collect();
    if rev.len() < spec.n_time_reversals {
        return Err(SynthError::InsufficientTransitions {
            kind: "time reversals",
            wanted: spec.n_time_reversals,
            available: rev.len(),
        });
    }
    for &i in &rev {
        let t = &mut out.trajectories[i];
        let (ca, cb) = reversal_site(&topo, t).unwrap();
        let n = t.visits.len();
        let a = t.visits[n - 2].clone();
        let b = t.visits[n - 1].clone();
        let transit = b.enter - a.exit;
        let b_new = Visit::new(cb.clone(), a.enter, a.enter + b.duration());
        let a_new = Visit::new(ca.clone(), b_new.exit + transit, b_new.exit + transit + a.duration());
        t.visits[n - 2] = b_new;
        t.visits[n - 1] = a_new;
        used.insert(i);
        report.time_reversals.push(Injection {
            person: t.person,
            c1: ca,
            c2: cb,
        });
    }

    let slow: Vec<usize> = order
        .iter()
        .copied()
        .filter(|i| !used.contains(i) && slow_site(&topo, &out.trajectories[*i]).is_some())
        .take(spec.n_slow_transits)
        .collect();
    if slow.len() < spec.n_slow_transits {
        return Err(SynthError::InsufficientTransitions {
            kind: "slow transits",
            wanted: spec.n_slow_transits,
            available: slow.len(),
        });
    }
    for &i in &slow {
        let t = &mut out.trajectories[i];
        let (k, ca, cb) = slow_site(&topo, t).unwrap();
        let median = topo.travel_prior(&ca, &cb).unwrap();
        let delta = t.visits[k + 2].enter - t.visits[k].exit;
        // Well past twice the largest transit the prior can produce.
        let want = 4.0 * median + 60.0;
        let extra = (want - delta).max(0.0);
        t.visits[k + 1].exit += extra;
        for v in &mut t.visits[k + 2..] {
            v.enter += extra;
            v.exit += extra;
        }
        report.slow_transits.push(Injection {
            person: t.person,
            c1: ca,
            c2: cb,
        });
    }
    report.time_reversals.sort_by_key(|x| x.person);
    report.slow_transits.sort_by_key(|x| x.person);
    Ok((out, report))
}
