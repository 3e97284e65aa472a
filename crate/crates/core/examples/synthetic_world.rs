//! Generate a synthetic camera world, inject timing anomalies and summarise
//! what came out.
//!
//!     cargo run --example synthetic_world -- [university|factory] [PERSONS] [SEED]

use std::collections::BTreeMap;

use camsearch::synth::{generate_world, inject_anomalies, AnomalySpec, WorldGenConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let topo = args.next().unwrap_or_else(|| "university".into());
    let persons: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(400);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(11);

    let world = generate_world(&WorldGenConfig::new(&topo, persons, seed))?;
    let visits: usize = world.trajectories.iter().map(|t| t.visits.len()).sum();
    println!(
        "{}: {} people, {} cameras, {visits} visits ({:.1} per person)",
        world.topology_name,
        world.gallery.len(),
        world.cameras.len(),
        visits as f64 / world.trajectories.len().max(1) as f64
    );

    let mut per_camera: BTreeMap<&str, usize> = BTreeMap::new();
    for v in world.trajectories.iter().flat_map(|t| &t.visits) {
        *per_camera.entry(v.camera.as_str()).or_default() += 1;
    }
    for (cam, n) in &per_camera {
        println!("  {cam} {n:>6}");
    }

    for attr in ["upper_garment_color", "visual_gender"] {
        let mut h: BTreeMap<String, usize> = BTreeMap::new();
        for p in &world.gallery {
            *h.entry(p.attrs[attr].to_string()).or_default() += 1;
        }
        println!("{attr}: {h:?}");
    }

    let spec = AnomalySpec {
        n_time_reversals: 5,
        n_slow_transits: 3,
    };
    let (_, report) = inject_anomalies(&world, spec, seed)?;
    for i in &report.time_reversals {
        println!("time reversal: person {} on {} -> {}", i.person, i.c1, i.c2);
    }
    for i in &report.slow_transits {
        println!("slow transit:  person {} on {} -> {}", i.person, i.c1, i.c2);
    }
    Ok(())
}
