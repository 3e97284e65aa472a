use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::saliency::SaliencyTable;
use super::Clue;
use crate::rng::seeded;
use crate::schema::AttributeSchema;
use crate::world::PersonRecord;

pub const HARD_FRACTION: f64 = 0.35;
pub const BALANCED_POOL: (usize, usize) = (5, 30);
pub const HARD_POOL: (usize, usize) = (30, 90);
pub const POOL_GATE: (usize, usize) = (5, 90);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClueMode {
    Balanced,
    Hard,
}

/// Per-target mode from the stream seeded with `id * 1337 + seed`.
pub fn clue_mode(target: u32, seed: u64) -> ClueMode {
    let s = u64::from(target).wrapping_mul(1337).wrapping_add(seed);
    if seeded(s).random::<f64>() < HARD_FRACTION {
        ClueMode::Hard
    } else {
        ClueMode::Balanced
    }
}

/// Opening clue for `target` over `pool`.
///
/// Eligible attributes are neither clue- nor IG-excluded and the target holds
/// a definite, non-None value. Among those whose matching pool falls in the
/// mode's range, Balanced takes the highest saliency and Hard the lowest;
/// when none falls in range the whole eligible set is ranked the same way.
/// Ties go to the lexicographically smallest attribute name.
pub fn select_clue(
    schema: &AttributeSchema,
    saliency: &SaliencyTable,
    target: &PersonRecord,
    pool: &[&PersonRecord],
    mode: ClueMode,
) -> Option<Clue> {
    let mut options: Vec<(String, f64, usize)> = Vec::new();
    let mut defs: Vec<_> = schema
        .attributes
        .iter()
        .filter(|d| !d.clue_excluded && !d.ig_excluded)
        .collect();
    defs.sort_by(|a, b| a.name.cmp(&b.name));
    for d in defs {
        let Some(v) = target.attrs.get(&d.name) else { continue };
        if v.is_uncertain() || v.is_none_value() {
            continue;
        }
        let Some(score) = saliency.get(&d.name, v) else { continue };
        let size = pool.iter().filter(|p| p.attrs.get(&d.name) == Some(v)).count();
        options.push((d.name.clone(), score, size));
    }
    let (lo, hi) = match mode {
        ClueMode::Balanced => BALANCED_POOL,
        ClueMode::Hard => HARD_POOL,
    };
    let in_range: Vec<&(String, f64, usize)> = options.iter().filter(|o| o.2 >= lo && o.2 <= hi).collect();
    let ranked: Vec<&(String, f64, usize)> = if in_range.is_empty() {
        options.iter().collect()
    } else {
        in_range
    };
    let pick = ranked.into_iter().reduce(|best, o| {
        let better = match mode {
            ClueMode::Balanced => o.1 > best.1,
            ClueMode::Hard => o.1 < best.1,
        };
        if better {
            o
        } else {
            best
        }
    })?;
    Some(Clue {
        attribute: pick.0.clone(),
        value: target.attrs[&pick.0].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_split_is_roughly_35_percent() {
        let hard = (1..=2000).filter(|&i| clue_mode(i, 42) == ClueMode::Hard).count();
        let frac = hard as f64 / 2000.0;
        assert!((frac - 0.35).abs() < 0.04, "{frac}");
        assert_eq!(clue_mode(17, 42), clue_mode(17, 42));
    }
}
