//! A reference agent speaking the wire protocol over TCP.
//!
//!     camsearch serve --tasks tasks.json --port 7341 &
//!     cargo run --example remote_agent -- 127.0.0.1:7341 greedy

use std::io::BufReader;
use std::net::TcpStream;

use camsearch::agents::{AgentConfig, AgentKind, PlannerAgent};
use camsearch::protocol::run_client;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let addr = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:7341".into());
    let kind = std::env::args().nth(2).unwrap_or_else(|| "greedy".into());
    let kind = AgentKind::parse(&kind).filter(|k| *k != AgentKind::Oracle).ok_or("agent must be greedy, rule-based or random-order")?;
    let stream = TcpStream::connect(&addr)?;
    stream.set_nodelay(true)?;
    let mut r = BufReader::new(stream.try_clone()?);
    let mut w = stream;
    let ts = run_client(&mut r, &mut w, kind.name(), |_| Box::new(PlannerAgent::new(AgentConfig::new(kind))))?;
    let ok = ts.iter().filter(|t| t.success()).count();
    println!("{ok}/{} correct over the wire", ts.len());
    Ok(())
}
