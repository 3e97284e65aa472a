//! Run two agents over a small generated batch, write their transcripts
//! and score them: per-track tables, SR@T curve and the per-task CSV.
//!
//!     cargo run --release --example scoring -- [OUT_DIR]

use std::path::PathBuf;

use camsearch::agents::{run_batch, task_ids, AgentConfig, AgentKind};
use camsearch::env::EnvConfig;
use camsearch::metrics::{aggregate, read_transcripts, to_csv, write_transcripts};
use camsearch::sttg::{build_sttg, BuildConfig};
use camsearch::synth::{generate_world, WorldGenConfig};
use camsearch::taskgen::{gen_track, GenConfig, TaskSet};
use camsearch::Topology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let world = generate_world(&WorldGenConfig::new("factory", 400, 9))?;
    let (sttg, _) = build_sttg(&world, &Topology::factory(), &BuildConfig::default())?;
    let cfg = GenConfig::default();
    let mut tasks = Vec::new();
    for track in 1..=3 {
        tasks.extend(gen_track(&world, &sttg, track, &cfg)?.into_iter().take(60));
    }
    let set = TaskSet::new(&world, Some(&sttg), cfg.seed, tasks);
    let ids = task_ids(&set, None);

    for kind in [AgentKind::Greedy, AgentKind::RandomOrder] {
        let ts = run_batch(&set, &ids, &AgentConfig::new(kind), &EnvConfig::default())?;
        let path = out.join(format!("{}.ndjson", kind.name()));
        write_transcripts(&path, &ts)?;
        let back = read_transcripts(&path)?;
        let report = aggregate(&back)?;
        println!("== {} ({})", report.agent, path.display());
        print!("{}", report.to_table());
        for tr in &report.tracks {
            let curve: Vec<String> = tr.sr.iter().take(8).map(|v| format!("{:.2}", v)).collect();
            println!("track {} SR@1..8 {}", tr.track, curve.join(" "));
        }
        let csv = to_csv(&back);
        println!("csv: {} rows, header {}", csv.lines().count() - 1, csv.lines().next().unwrap_or(""));
    }
    Ok(())
}
