use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

/// Track 1 base score with the short-path gate.
pub fn difficulty_score(c0: usize, turns: usize, r_u: f64) -> f64 {
    let base = 0.45 * c0 as f64 / 90.0 + 0.40 * turns as f64 / 10.0 + 0.15 * r_u;
    if turns < 3 {
        base * 0.7
    } else {
        base
    }
}

/// Midrank percentile of each score within the batch, in [0, 1]. A batch of
/// one sits at 0.5.
pub fn midrank_percentiles(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n <= 1 {
        return vec![0.5; n];
    }
    scores
        .iter()
        .map(|s| {
            let less = scores.iter().filter(|x| *x < s).count() as f64;
            let equal = scores.iter().filter(|x| *x == s).count() as f64;
            (less + (equal - 1.0) / 2.0) / (n - 1) as f64
        })
        .collect()
}

/// Easy below the 33rd percentile, Hard above the 67th, Medium otherwise.
pub fn label_batch(scores: &[f64]) -> Vec<Difficulty> {
    midrank_percentiles(scores)
        .into_iter()
        .map(|p| {
            if p < 1.0 / 3.0 {
                Difficulty::Easy
            } else if p > 2.0 / 3.0 {
                Difficulty::Hard
            } else {
                Difficulty::Medium
            }
        })
        .collect()
}

pub fn track2_difficulty(c0: usize, turns: usize) -> Difficulty {
    if c0 <= 5 && turns <= 2 {
        Difficulty::Easy
    } else if c0 <= 10 && turns <= 4 {
        Difficulty::Medium
    } else {
        Difficulty::Hard
    }
}

/// Easy needs a small pool and at least two timing eliminations; Hard is
/// any path of three or more turns.
pub fn track3_difficulty(c0: usize, temporal_eliminations: usize, tau_star: usize) -> Difficulty {
    if c0 <= 6 && temporal_eliminations >= 2 {
        Difficulty::Easy
    } else if tau_star >= 3 {
        Difficulty::Hard
    } else {
        Difficulty::Medium
    }
}
