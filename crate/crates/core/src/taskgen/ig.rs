use std::collections::BTreeMap;

use super::{DisambiguationStep, StepKind};
use crate::schema::{AttrValue, AttributeDef, AttributeSchema};
use crate::world::{PersonId, PersonRecord};

pub const ALPHA: f64 = 0.5;

/// Shannon entropy (bits) of a count histogram. Counts are sorted first so
/// equal histograms give bit-identical results regardless of value order.
pub fn entropy_from_counts(counts: &[usize]) -> f64 {
    let mut c: Vec<usize> = counts.iter().copied().filter(|&x| x > 0).collect();
    c.sort_unstable();
    let n: usize = c.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h = -c
        .iter()
        .map(|&k| {
            let p = k as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Non-Uncertain value counts and the Uncertain count among `cands`.
pub fn value_counts<'a>(attr: &str, cands: &[&'a PersonRecord]) -> (BTreeMap<&'a AttrValue, usize>, usize) {
    let mut counts = BTreeMap::new();
    let mut unc = 0;
    for p in cands {
        match p.attrs.get(attr) {
            Some(v) if !v.is_uncertain() => *counts.entry(v).or_default() += 1,
            _ => unc += 1,
        }
    }
    (counts, unc)
}

/// IG(a) = H(a | C) * (1 - alpha * p_uncertain(a)); ig_excluded attributes
/// score negative infinity.
pub fn information_gain(def: &AttributeDef, cands: &[&PersonRecord], alpha: f64) -> f64 {
    if def.ig_excluded {
        return f64::NEG_INFINITY;
    }
    if cands.is_empty() {
        return 0.0;
    }
    let (counts, unc) = value_counts(&def.name, cands);
    let c: Vec<usize> = counts.values().copied().collect();
    let h = entropy_from_counts(&c);
    h * (1.0 - alpha * unc as f64 / cands.len() as f64)
}

/// IG from a histogram keyed by value, with the Uncertain bucket given separately.
pub fn information_gain_from_hist(counts: &[usize], uncertain: usize, alpha: f64) -> f64 {
    let total: usize = counts.iter().sum::<usize>() + uncertain;
    if total == 0 {
        return 0.0;
    }
    entropy_from_counts(counts) * (1.0 - alpha * uncertain as f64 / total as f64)
}

/// Best attribute for the target among `cands`: highest IG, ties to the
/// lexicographically smallest name; attributes where the target is
/// Uncertain, or listed in `skip`, are not eligible. None when no attribute
/// scores above zero.
pub fn best_attribute<'s>(
    schema: &'s AttributeSchema,
    target: &PersonRecord,
    cands: &[&PersonRecord],
    skip: &[&str],
    alpha: f64,
) -> Option<(&'s AttributeDef, f64)> {
    let mut defs: Vec<&AttributeDef> = schema.ig_attributes();
    defs.sort_by(|a, b| a.name.cmp(&b.name));
    let mut best: Option<(&AttributeDef, f64)> = None;
    for def in defs {
        if skip.contains(&def.name.as_str()) {
            continue;
        }
        match target.attrs.get(&def.name) {
            Some(v) if !v.is_uncertain() => {}
            _ => continue,
        }
        let ig = information_gain(def, cands, alpha);
        if ig > 0.0 && best.map_or(true, |(_, b)| ig > b) {
            best = Some((def, ig));
        }
    }
    best
}

/// Apply one attribute step: keep candidates holding the target's value.
pub fn attribute_step(attr: &str, target: &PersonRecord, cands: &[&PersonRecord]) -> (DisambiguationStep, Vec<PersonId>) {
    let value: AttrValue = target.attrs[attr].clone();
    let (keep, gone): (Vec<&PersonRecord>, Vec<&PersonRecord>) =
        cands.iter().partition(|p| p.attrs.get(attr) == Some(&value));
    let step = DisambiguationStep {
        kind: StepKind::Attribute,
        attribute: Some(attr.to_string()),
        value: Some(value),
        cameras: None,
        question: None,
        answer: None,
        candidates_before: cands.len() as u32,
        candidates_after: keep.len() as u32,
        eliminated_ids: gone.iter().map(|p| p.id).collect(),
    };
    (step, keep.iter().map(|p| p.id).collect())
}

/// Greedy IG disambiguation from `c0` toward `target`, at most `max_turns`
/// steps. Stops at one candidate or when no attribute has positive IG.
pub fn simulate_ig_path(
    schema: &AttributeSchema,
    target: &PersonRecord,
    c0: &[&PersonRecord],
    max_turns: usize,
    alpha: f64,
) -> (Vec<DisambiguationStep>, Vec<PersonId>) {
    let mut cands: Vec<&PersonRecord> = c0.to_vec();
    let mut steps = Vec::new();
    for _ in 0..max_turns {
        if cands.len() <= 1 {
            break;
        }
        let Some((def, _)) = best_attribute(schema, target, &cands, &[], alpha) else {
            break;
        };
        let (step, keep) = attribute_step(&def.name, target, &cands);
        cands.retain(|p| keep.contains(&p.id));
        steps.push(step);
    }
    (steps, cands.iter().map(|p| p.id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Attributes;

    fn def(name: &str) -> AttributeDef {
        AttributeSchema::default_schema().get(name).unwrap().clone()
    }

    fn people(vals: &[&str]) -> Vec<PersonRecord> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| {
                let mut attrs = Attributes::new();
                attrs.insert("hair_color".into(), AttrValue::single(*v));
                PersonRecord { id: i as u32, attrs }
            })
            .collect()
    }

    #[test]
    fn uniform_binary_is_one_bit() {
        let g = people(&["Black", "Black", "Brown", "Brown"]);
        let r: Vec<&PersonRecord> = g.iter().collect();
        assert_eq!(information_gain(&def("hair_color"), &r, ALPHA), 1.0);
    }

    #[test]
    fn constant_is_zero() {
        let g = people(&["Black"; 4]);
        let r: Vec<&PersonRecord> = g.iter().collect();
        assert_eq!(information_gain(&def("hair_color"), &r, ALPHA), 0.0);
    }

    #[test]
    fn uncertain_penalty() {
        let g = people(&["Black", "Brown", "Uncertain", "Uncertain"]);
        let r: Vec<&PersonRecord> = g.iter().collect();
        // H over the two certain values is 1 bit; p_uncertain = 0.5.
        assert_eq!(information_gain(&def("hair_color"), &r, ALPHA), 0.75);
    }

    #[test]
    fn excluded_attribute_is_sentinel() {
        assert_eq!(information_gain(&def("leg_visibility"), &[], ALPHA), f64::NEG_INFINITY);
    }

    #[test]
    fn entropy_is_order_free() {
        assert_eq!(entropy_from_counts(&[3, 1, 2]).to_bits(), entropy_from_counts(&[1, 2, 3]).to_bits());
    }
}
