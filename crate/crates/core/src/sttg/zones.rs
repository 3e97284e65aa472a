use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::topology::{PairSet, ZoneDecl};
use crate::unionfind::UnionFind;
use crate::world::CameraId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZoneKind {
    Atomic,
    Singleton,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub name: String,
    pub phrase: String,
    pub kind: ZoneKind,
    pub cameras: BTreeSet<CameraId>,
}

impl Zone {
    pub fn contains(&self, cam: &str) -> bool {
        self.cameras.contains(cam)
    }
}

/// Connected components of the undirected graph over `cameras` with edges
/// `pairs`, each sorted, ordered by smallest member.
pub fn components(cameras: &[CameraId], pairs: &PairSet) -> Vec<Vec<CameraId>> {
    let mut sorted: Vec<CameraId> = cameras.to_vec();
    sorted.sort();
    sorted.dedup();
    let idx = |c: &str| sorted.binary_search_by(|x| x.as_str().cmp(c)).ok();
    let mut uf = UnionFind::new(sorted.len());
    for (a, b) in pairs {
        if let (Some(i), Some(j)) = (idx(a), idx(b)) {
            uf.union(i, j);
        }
    }
    uf.groups()
        .into_iter()
        .map(|g| g.into_iter().map(|i| sorted[i].clone()).collect())
        .collect()
}

fn name_zone(cams: &[CameraId], decls: &[ZoneDecl], kind: ZoneKind) -> Zone {
    let set: BTreeSet<CameraId> = cams.iter().cloned().collect();
    if let Some(d) = decls
        .iter()
        .find(|d| d.cameras.iter().cloned().collect::<BTreeSet<_>>() == set)
    {
        return Zone {
            id: d.id.clone(),
            name: d.name.clone(),
            phrase: d.phrase.clone(),
            kind,
            cameras: set,
        };
    }
    let prefix = if kind == ZoneKind::Composite { "ZC" } else { "Z" };
    Zone {
        id: format!("{prefix}_{}", cams.join("_").to_uppercase()),
        name: format!("Area of {} camera(s)", cams.len()),
        phrase: "that area".to_string(),
        kind,
        cameras: set,
    }
}

/// Atomic zones are the OVERLAP components (singletons included). Composite
/// zones are the components after also uniting SOFT_ADJ pairs, kept only
/// where they merge at least two atomic zones.
pub fn build_zones(
    cameras: &[CameraId],
    overlap: &PairSet,
    soft: &PairSet,
    decls: &[ZoneDecl],
    composite_decls: &[ZoneDecl],
) -> (Vec<Zone>, Vec<Zone>) {
    let atomic_groups = components(cameras, overlap);
    let zones: Vec<Zone> = atomic_groups
        .iter()
        .map(|g| {
            let kind = if g.len() == 1 {
                ZoneKind::Singleton
            } else {
                ZoneKind::Atomic
            };
            name_zone(g, decls, kind)
        })
        .collect();
    let both: PairSet = overlap.union(soft).cloned().collect();
    let composite = components(cameras, &both)
        .into_iter()
        .filter(|g| zones.iter().filter(|z| g.iter().any(|c| z.contains(c))).count() >= 2)
        .map(|g| name_zone(&g, composite_decls, ZoneKind::Composite))
        .collect();
    (zones, composite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{pair_key, Topology};
    use crate::world::camera_ids;

    #[test]
    fn factory_zones_match_table() {
        let t = Topology::factory();
        let (z, c) = build_zones(&t.camera_ids(), &t.overlap_set(), &t.soft_set(), &t.zones, &t.composite_zones);
        assert_eq!(z.len(), 9);
        let wh = z.iter().find(|z| z.id == "F_WAREHOUSE").unwrap();
        assert_eq!(wh.cameras.iter().cloned().collect::<Vec<_>>(), ["c01", "c02", "c04", "c05"]);
        assert_eq!(z.iter().filter(|z| z.kind == ZoneKind::Singleton).count(), 5);
        let ids: Vec<&str> = c.iter().map(|z| z.id.as_str()).collect();
        assert_eq!(ids, ["FC_1F_INDOOR", "FC_2F"]);
    }

    #[test]
    fn university_has_six_zones() {
        let t = Topology::university();
        let (z, c) = build_zones(&t.camera_ids(), &t.overlap_set(), &t.soft_set(), &t.zones, &t.composite_zones);
        assert_eq!(z.len(), 6);
        assert!(z.iter().all(|z| !z.id.starts_with("Z_")));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].id, "SC_INDOOR");
    }

    #[test]
    fn no_overlap_gives_singletons() {
        let cams = camera_ids(16);
        let (z, c) = build_zones(&cams, &PairSet::new(), &PairSet::new(), &[], &[]);
        assert_eq!(z.len(), 16);
        assert!(z.iter().all(|z| z.kind == ZoneKind::Singleton));
        assert!(c.is_empty());
        let soft: PairSet = [pair_key("c01", "c02")].into();
        let (_, c) = build_zones(&cams, &PairSet::new(), &soft, &[], &[]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].id, "ZC_C01_C02");
    }
}
