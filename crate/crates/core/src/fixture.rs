//! The `factory_small` fixture: a hand-built factory world reproducing the
//! worked examples for all three tracks.
//!
//! * Track 1, target 134: lower Grey leaves 11, upper Black 3, hair Short 1.
//! * Track 2, target 3: upper Blue leaves 15 in the warehouse, shoe type 2,
//!   the "deep inside" answer 1.
//! * Track 3, target 3: upper Blue leaves 15; the c05 to c08 check keeps 5
//!   (5 time reversals, 1 too slow, 4 never at c08), lower color 1.
//!
//! Background people fill c05 to c08 with 184 more transits so that edge
//! has min 7.6, median 11.2, max 20.7 over 189 samples, and one walker
//! covers every other declared edge plus one self-loop per camera.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::schema::{AttrValue, AttributeSchema, Attributes, UNCERTAIN};
use crate::sttg::{build_sttg, BuildConfig, Sttg};
use crate::taskgen::{build_track1_task, build_track2_task, build_track3_task, Clue, GenConfig, Task, TaskSet};
use crate::topology::Topology;
use crate::world::{CameraId, PersonId, PersonRecord, Trajectory, Visit, World};

pub const SCENARIO: &str = "s01";
pub const TRACK1_TARGET: PersonId = 134;
pub const TARGET: PersonId = 3;

pub const FEASIBLE: [PersonId; 5] = [3, 20, 22, 45, 86];
pub const TIME_REVERSAL: [PersonId; 5] = [10, 19, 40, 65, 73];
pub const TOO_SLOW: [PersonId; 1] = [102];
pub const NOT_PRESENT: [PersonId; 4] = [1, 63, 72, 89];
pub const GREY_GROUP: [PersonId; 11] = [134, 5, 6, 7, 8, 9, 11, 12, 13, 14, 15];
/// Background person whose trajectory covers the declared edges.
pub const WALKER: PersonId = 16;

/// c05 to c08 transits contributed by the Blue group, in person order.
const BLUE_TRANSITS: [(PersonId, f64); 5] = [(3, 8.9), (20, 10.0), (22, 12.5), (45, 15.0), (86, 9.5)];

pub fn person_ids() -> Vec<PersonId> {
    let mut ids: Vec<PersonId> = (1..=87).collect();
    ids.extend([89, 102, 134]);
    ids
}

fn blue_group() -> Vec<PersonId> {
    let mut v: Vec<PersonId> = FEASIBLE
        .iter()
        .chain(&TIME_REVERSAL)
        .chain(&TOO_SLOW)
        .chain(&NOT_PRESENT)
        .copied()
        .collect();
    v.sort_unstable();
    v
}

fn definite_values(schema: &AttributeSchema, attr: &str) -> Vec<String> {
    schema
        .get(attr)
        .expect("schema attribute")
        .values
        .iter()
        .filter(|v| v.as_str() != UNCERTAIN)
        .cloned()
        .collect()
}

fn wrap(schema: &AttributeSchema, attr: &str, v: &str) -> AttrValue {
    if schema.get(attr).is_some_and(|d| d.multi_select) {
        AttrValue::multi([v])
    } else {
        AttrValue::single(v)
    }
}

/// Shared attributes of the Blue and Grey groups: the first value of each.
fn base_attrs(schema: &AttributeSchema) -> Attributes {
    schema
        .attributes
        .iter()
        .map(|d| (d.name.clone(), wrap(schema, &d.name, &definite_values(schema, &d.name)[0])))
        .collect()
}

fn background_attrs(schema: &AttributeSchema, id: PersonId) -> Attributes {
    schema
        .attributes
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let vals = definite_values(schema, &d.name);
            let mut i = (id as usize * 7 + k * 3) % vals.len();
            let banned = match d.name.as_str() {
                "upper_garment_color" => Some("Blue"),
                "lower_garment_color" => Some("Grey"),
                _ => None,
            };
            if banned == Some(vals[i].as_str()) {
                i = (i + 1) % vals.len();
            }
            (d.name.clone(), wrap(schema, &d.name, &vals[i]))
        })
        .collect()
}

fn gallery(schema: &AttributeSchema) -> Vec<PersonRecord> {
    let blue = blue_group();
    let lower: BTreeMap<PersonId, &str> = [(3, "Black"), (20, "White"), (22, "Red"), (45, "Green"), (86, "Yellow")].into();
    let shoes: BTreeMap<PersonId, &str> = [
        (3, "Dress Shoes"),
        (72, "Dress Shoes"),
        (20, "Sneakers"),
        (22, "Sneakers"),
        (45, "Sneakers"),
        (86, "Sneakers"),
        (10, "Boots/Walker"),
        (19, "Boots/Walker"),
        (40, "Boots/Walker"),
        (65, "Sandal/Slipper"),
        (73, "Sandal/Slipper"),
        (102, "Sandal/Slipper"),
        (1, "Other"),
        (63, "Other"),
        (89, "Other"),
    ]
    .into();
    let grey_upper: BTreeMap<PersonId, &str> = [
        (134, "Black"),
        (5, "Black"),
        (6, "Black"),
        (7, "White"),
        (8, "White"),
        (9, "Red"),
        (11, "Red"),
        (12, "Green"),
        (13, "Green"),
        (14, "Yellow"),
        (15, "Yellow"),
    ]
    .into();
    let hair: BTreeMap<PersonId, &str> = [(134, "Short (Ear-length)"), (6, "Long (Shoulder+)")].into();
    person_ids()
        .into_iter()
        .map(|id| {
            let mut attrs;
            if blue.contains(&id) {
                attrs = base_attrs(schema);
                attrs.insert("upper_garment_color".into(), AttrValue::single("Blue"));
                attrs.insert(
                    "lower_garment_color".into(),
                    AttrValue::single(*lower.get(&id).unwrap_or(&"Black")),
                );
                attrs.insert("shoe_type".into(), AttrValue::single(shoes[&id]));
            } else if GREY_GROUP.contains(&id) {
                attrs = base_attrs(schema);
                attrs.insert("lower_garment_color".into(), AttrValue::single("Grey"));
                attrs.insert("upper_garment_color".into(), AttrValue::single(grey_upper[&id]));
                attrs.insert(
                    "hair_style".into(),
                    AttrValue::single(*hair.get(&id).unwrap_or(&"Medium (Neck-length)")),
                );
            } else {
                attrs = background_attrs(schema, id);
            }
            PersonRecord { id, attrs }
        })
        .collect()
}

fn v(cam: &str, enter: f64, exit: f64) -> Visit {
    Visit::new(cam, enter, exit)
}

fn blue_trajectories() -> Vec<Trajectory> {
    let mut out = Vec::new();
    for (k, (id, delta)) in BLUE_TRANSITS.iter().enumerate() {
        let visits = if *id == TARGET {
            vec![v("c01", 1000.0, 1100.0), v("c05", 1102.0, 1130.0), v("c08", 1138.9, 1180.0)]
        } else {
            let t0 = 900.0 + 20.0 * k as f64;
            let out5 = t0 + 120.0;
            vec![
                v("c01", t0, t0 + 100.0),
                v("c05", t0 + 102.0, out5),
                v("c08", out5 + delta, out5 + delta + 30.0),
            ]
        };
        out.push(Trajectory { person: *id, visits });
    }
    for id in TIME_REVERSAL {
        out.push(Trajectory {
            person: id,
            visits: vec![v("c08", 800.0, 820.0), v("c05", 832.0, 850.0), v("c01", 852.0, 1000.0)],
        });
    }
    out.push(Trajectory {
        person: 102,
        visits: vec![
            v("c01", 800.0, 960.0),
            v("c05", 962.0, 980.0),
            v("c06", 990.0, 1050.0),
            v("c08", 1069.4, 1100.0),
        ],
    });
    for id in NOT_PRESENT {
        let cam = if id == 1 { "c01" } else { "c02" };
        out.push(Trajectory {
            person: id,
            visits: vec![v(cam, 900.0, 1000.0)],
        });
    }
    out
}

/// The 184 background c05 to c08 transits: the three anchor values plus 90
/// strictly between min and median and 91 strictly between median and max.
pub fn background_transits() -> Vec<f64> {
    let mut vals = vec![7.6, 11.2, 20.7];
    vals.extend((1..=90).map(|i| 7.6 + 3.6 * i as f64 / 91.0));
    vals.extend((1..=91).map(|i| 11.2 + 9.5 * i as f64 / 92.0));
    vals
}

fn shuttle_trajectories(ids: &[PersonId]) -> Vec<Trajectory> {
    let vals = background_transits();
    let mut out = Vec::new();
    for (k, chunk) in vals.chunks(3).enumerate() {
        let mut t = 20_000.0 + 1000.0 * k as f64;
        let mut visits = Vec::new();
        for (j, d) in chunk.iter().enumerate() {
            if j > 0 {
                t += 12.0;
            }
            visits.push(v("c05", t, t + 20.0));
            t += 20.0 + d;
            visits.push(v("c08", t, t + 20.0));
            t += 20.0;
        }
        out.push(Trajectory {
            person: ids[k],
            visits,
        });
    }
    out
}

/// Shortest path over declared directed pairs, never using `banned`.
fn bfs(adj: &BTreeMap<&str, Vec<&str>>, from: &str, to: &str, banned: (&str, &str)) -> Vec<String> {
    let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
    let mut seen: BTreeSet<&str> = [from].into();
    let mut q = VecDeque::from([from]);
    while let Some(c) = q.pop_front() {
        if c == to {
            break;
        }
        for &n in adj.get(c).map(Vec::as_slice).unwrap_or(&[]) {
            if (c, n) == banned || !seen.insert(n) {
                continue;
            }
            prev.insert(n, c);
            q.push_back(n);
        }
    }
    let mut path = vec![to.to_string()];
    let mut c = to;
    while c != from {
        c = prev[c];
        path.push(c.to_string());
    }
    path.reverse();
    path
}

/// Camera sequence covering every declared directed pair except c05 to c08.
fn covering_route(topo: &Topology) -> Vec<CameraId> {
    let banned = ("c05", "c08");
    let edges = topo.declared_directed();
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in &edges {
        adj.entry(a.as_str()).or_default().push(b.as_str());
    }
    let mut route: Vec<CameraId> = vec!["c01".into()];
    for (a, b) in &edges {
        if (a.as_str(), b.as_str()) == banned {
            continue;
        }
        let here = route.last().expect("non-empty").clone();
        let hop = bfs(&adj, &here, a, banned);
        route.extend(hop.into_iter().skip(1));
        route.push(b.clone());
    }
    route
}

fn walker_trajectory(topo: &Topology) -> Trajectory {
    let route = covering_route(topo);
    let mut looped: BTreeSet<CameraId> = BTreeSet::new();
    let mut visits = Vec::new();
    let mut t = 100_000.0;
    for cam in route {
        visits.push(v(&cam, t, t + 20.0));
        t += 25.0;
        // First visit to each camera is split by a 10 s gap: one self-loop.
        if looped.insert(cam.clone()) {
            visits.push(v(&cam, t + 5.0, t + 25.0));
            t += 35.0;
        }
    }
    Trajectory { person: WALKER, visits }
}

pub fn factory_small() -> World {
    let schema = AttributeSchema::default_schema();
    let topo = Topology::factory();
    let gallery = gallery(&schema);
    let mut trajectories = blue_trajectories();
    trajectories.push(walker_trajectory(&topo));
    let taken: BTreeSet<PersonId> = blue_group()
        .into_iter()
        .chain(GREY_GROUP)
        .chain([WALKER])
        .collect();
    let shuttles: Vec<PersonId> = person_ids().into_iter().filter(|i| !taken.contains(i)).collect();
    trajectories.extend(shuttle_trajectories(&shuttles));
    trajectories.sort_by_key(|t| t.person);
    World {
        schema,
        gallery,
        trajectories,
        cameras: topo.camera_ids(),
        topology_name: topo.name.clone(),
        scenario: SCENARIO.to_string(),
    }
}

pub fn factory_small_sttg(world: &World) -> Sttg {
    build_sttg(world, &Topology::factory(), &BuildConfig::default())
        .expect("fixture graph builds")
        .0
}

pub fn track1_clue() -> Clue {
    Clue {
        attribute: "lower_garment_color".into(),
        value: AttrValue::single("Grey"),
    }
}

pub fn blue_clue() -> Clue {
    Clue {
        attribute: "upper_garment_color".into(),
        value: AttrValue::single("Blue"),
    }
}

/// The three worked-example tasks.
pub fn factory_small_tasks(world: &World, sttg: &Sttg) -> Vec<Task> {
    let cfg = GenConfig::default();
    vec![
        build_track1_task(world, TRACK1_TARGET, &track1_clue(), &cfg).expect("track 1 fixture task"),
        build_track2_task(world, sttg, TARGET, &blue_clue(), &cfg).expect("track 2 fixture task"),
        build_track3_task(world, sttg, TARGET, &blue_clue(), &cfg).expect("track 3 fixture task"),
    ]
}

pub fn factory_small_taskset() -> TaskSet {
    let world = factory_small();
    let sttg = factory_small_sttg(&world);
    let tasks = factory_small_tasks(&world, &sttg);
    TaskSet::new(&world, Some(&sttg), GenConfig::default().seed, tasks)
}

/// Path of the shipped copy, relative to the crate root.
pub const SHIPPED_PATH: &str = "data/fixtures/factory_small.json";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ninety_people() {
        let w = factory_small();
        assert_eq!(w.gallery.len(), 90);
        w.validate().unwrap();
    }

    #[test]
    fn shipped_copy_matches_builder() {
        let shipped = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixtures/factory_small.json"))
            .expect("shipped fixture present");
        assert_eq!(shipped, factory_small().to_canonical_json());
    }

    #[test]
    fn background_transit_counts() {
        let vals = background_transits();
        assert_eq!(vals.len(), 184);
        assert_eq!(vals.iter().filter(|&&x| x > 7.6 && x < 11.2).count(), 90);
        assert_eq!(vals.iter().filter(|&&x| x > 11.2 && x < 20.7).count(), 91);
    }
}
