//! Build the `factory_small` fixture, write it to disk and walk through the
//! three worked-example tasks with the oracle agent.
//!
//!     cargo run --example fixture_walkthrough [-- OUT_DIR]

use camsearch::agents::{Agent, OracleAgent};
use camsearch::env::{EnvConfig, Session};
use camsearch::fixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data/fixtures".into());
    std::fs::create_dir_all(&out)?;
    let world = fixture::factory_small();
    world.save(format!("{out}/factory_small.json"))?;
    let sttg = fixture::factory_small_sttg(&world);
    let e = sttg.edge("c05", "c08").expect("c05 -> c08");
    println!(
        "graph: {} edges, {} zones; c05->c08 n={} min={:.1} med={:.1} max={:.1}",
        sttg.edges.len(),
        sttg.zones.len(),
        e.n,
        e.t_min,
        e.t_med,
        e.t_max
    );
    let set = fixture::factory_small_taskset();
    set.save(format!("{out}/factory_small_tasks.json"))?;
    for task in &set.tasks {
        let trail: Vec<String> = std::iter::once(task.initial_candidates.len().to_string())
            .chain(task.oracle_path.iter().map(|s| s.candidates_after.to_string()))
            .collect();
        println!("{} tau*={} candidates {}", task.id, task.tau_star, trail.join(" -> "));
        for u in &task.dialogue {
            println!("    {:?}: {}", u.speaker, u.text);
        }
        if let Some(t3) = &task.track3 {
            let mut counts = std::collections::BTreeMap::new();
            for v in t3.verdicts.values() {
                *counts.entry(format!("{v:?}")).or_insert(0) += 1;
            }
            println!("    verdicts {counts:?}");
        }
        let mut session = Session::new(&set, &task.id, EnvConfig::default())?;
        OracleAgent::new(task.clone()).run(&mut session);
        let t = session.transcript();
        println!("    oracle: {:?} in {} turns, trace {:?}", t.outcome, t.turns_used, t.trace);
    }
    Ok(())
}
