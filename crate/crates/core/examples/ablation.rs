//! Seeded ablation: oracle, greedy, greedy without the temporal tool,
//! fixed-order and random-order agents on a synthetic factory batch.
//!
//!     cargo run --release --example ablation [-- PERSONS SEED TASKS_PER_TRACK]

use camsearch::agents::{run_batch, task_ids, AgentConfig, AgentKind};
use camsearch::env::EnvConfig;
use camsearch::metrics::aggregate;
use camsearch::sttg::{build_sttg, BuildConfig};
use camsearch::synth::{generate_world, WorldGenConfig};
use camsearch::taskgen::{gen_track, GenConfig, TaskSet};
use camsearch::Topology;

fn arg(i: usize, default: u64) -> u64 {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (persons, seed, per_track) = (arg(1, 1000) as usize, arg(2, 1), arg(3, 200) as usize);
    let topo = Topology::factory();
    let world = generate_world(&WorldGenConfig::new("factory", persons, seed))?;
    let (sttg, _) = build_sttg(&world, &topo, &BuildConfig::default())?;
    let cfg = GenConfig::default();
    let mut tasks = Vec::new();
    for track in 1..=3 {
        let all = gen_track(&world, &sttg, track, &cfg)?;
        let mean = all.iter().map(|t| t.tau_star as f64).sum::<f64>() / all.len() as f64;
        println!("track {track}: {} tasks, mean tau* {mean:.2}", all.len());
        tasks.extend(all.into_iter().take(per_track));
    }
    let set = TaskSet::new(&world, Some(&sttg), cfg.seed, tasks);
    let ids = task_ids(&set, None);
    let env = EnvConfig::default();
    let mut no_temporal = AgentConfig::new(AgentKind::Greedy);
    no_temporal.temporal_first = false;
    let agents = [
        AgentConfig::new(AgentKind::Oracle),
        AgentConfig::new(AgentKind::Greedy),
        no_temporal,
        AgentConfig::new(AgentKind::RuleBased),
        AgentConfig::new(AgentKind::RandomOrder),
    ];
    for a in &agents {
        let ts = run_batch(&set, &ids, a, &env)?;
        println!("== {}", ts[0].agent);
        print!("{}", aggregate(&ts)?.to_table());
    }
    Ok(())
}
