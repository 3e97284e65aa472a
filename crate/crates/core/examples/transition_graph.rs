//! Build the spatio-temporal transition graph of a synthetic world, print
//! the labeling report, edges and zones, and write Graphviz DOT.
//!
//!     cargo run --example transition_graph -- [OUT.dot]

use camsearch::sttg::{build_sttg, BuildConfig};
use camsearch::synth::{generate_world, WorldGenConfig};
use camsearch::Topology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = Topology::factory();
    let world = generate_world(&WorldGenConfig::new("factory", 600, 2))?;
    let (g, report) = build_sttg(&world, &topo, &BuildConfig::default())?;

    println!("{} transitions", report.transitions);
    println!("by status {:?}", report.by_status);
    println!("by reason {:?}", report.by_reason);
    println!("soft-adjacency thresholds {:?}", report.thresholds);
    println!("edges by type {:?}", g.count_by_type());

    let mut busiest: Vec<_> = g.edges.iter().filter(|e| !e.is_self_loop()).collect();
    busiest.sort_by(|a, b| b.n.cmp(&a.n).then((&a.from, &a.to).cmp(&(&b.from, &b.to))));
    println!("\nbusiest edges");
    for e in busiest.iter().take(8) {
        println!(
            "  {}->{} {:?} n={} min {:.1} med {:.1} max {:.1}",
            e.from, e.to, e.edge_type, e.n, e.t_min, e.t_med, e.t_max
        );
    }

    println!("\nzones");
    for z in g.zones.iter().chain(&g.composite_zones) {
        let cams: Vec<&str> = z.cameras.iter().map(String::as_str).collect();
        println!("  {:<16} {:?} {}", z.id, z.kind, cams.join(","));
    }

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, g.to_dot())?;
        println!("\nwrote {path}");
    }
    Ok(())
}
