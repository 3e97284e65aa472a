use std::collections::BTreeMap;

use crate::schema::{AttrValue, AttributeSchema};
use crate::world::PersonRecord;

/// attribute -> value -> score. Values nobody holds are absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SaliencyTable {
    pub scores: BTreeMap<String, BTreeMap<AttrValue, f64>>,
}

impl SaliencyTable {
    pub fn get(&self, attr: &str, value: &AttrValue) -> Option<f64> {
        self.scores.get(attr).and_then(|m| m.get(value)).copied()
    }
}

/// Saliency(a, v) = (1 / freq(v)) * ln(N / valid_count(a)), where
/// valid_count excludes Uncertain and None.
pub fn compute_saliency(schema: &AttributeSchema, gallery: &[PersonRecord]) -> SaliencyTable {
    let n = gallery.len() as f64;
    let mut scores = BTreeMap::new();
    for def in &schema.attributes {
        let mut freq: BTreeMap<AttrValue, usize> = BTreeMap::new();
        let mut valid = 0usize;
        for p in gallery {
            let Some(v) = p.attrs.get(&def.name) else { continue };
            if v.is_uncertain() {
                continue;
            }
            if !v.is_none_value() {
                valid += 1;
            }
            *freq.entry(v.clone()).or_default() += 1;
        }
        if valid == 0 {
            continue;
        }
        let idf = (n / valid as f64).ln();
        let m: BTreeMap<AttrValue, f64> = freq
            .into_iter()
            .map(|(v, f)| (v, idf / f as f64))
            .collect();
        scores.insert(def.name.clone(), m);
    }
    SaliencyTable { scores }
}
