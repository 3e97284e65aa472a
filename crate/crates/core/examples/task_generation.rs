//! Generate tasks for each track and show one of each: clue, oracle path,
//! difficulty and the rendered dialogue.
//!
//!     cargo run --release --example task_generation -- [PERSONS] [SEED]

use std::collections::BTreeMap;

use camsearch::sttg::{build_sttg, BuildConfig};
use camsearch::synth::{generate_world, WorldGenConfig};
use camsearch::taskgen::{gen_track, GenConfig};
use camsearch::Topology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let persons: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let world = generate_world(&WorldGenConfig::new("factory", persons, seed))?;
    let (sttg, _) = build_sttg(&world, &Topology::factory(), &BuildConfig::default())?;
    let cfg = GenConfig::default();

    for track in 1..=3 {
        let tasks = gen_track(&world, &sttg, track, &cfg)?;
        let mut levels: BTreeMap<String, usize> = BTreeMap::new();
        let mut tau: BTreeMap<u32, usize> = BTreeMap::new();
        for t in &tasks {
            *levels.entry(format!("{:?}", t.difficulty)).or_default() += 1;
            *tau.entry(t.tau_star).or_default() += 1;
        }
        println!("== track {track}: {} tasks, difficulty {levels:?}, tau* {tau:?}", tasks.len());
        let Some(t) = tasks.first() else { continue };
        println!("{} target {} clue {}={}", t.id, t.target, t.clue.attribute, t.clue.value);
        print!("  {}", t.initial_candidates.len());
        for s in &t.oracle_path {
            let what = match (&s.attribute, &s.cameras) {
                (Some(a), _) => a.clone(),
                (None, Some(c)) => c.join("/"),
                _ => "temporal".into(),
            };
            print!(" -[{what}]-> {}", s.candidates_after);
        }
        println!();
        for u in &t.dialogue {
            println!("  {:?}: {}", u.speaker, u.text);
        }
    }
    Ok(())
}
