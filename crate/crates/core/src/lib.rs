//! Interactive multi-camera person search: synthetic camera-network worlds,
//! spatio-temporal topology graphs, three tracks of search tasks with
//! algorithmic ground truth, a deterministic witness/tool environment,
//! reference agents and turn-weighted scoring.

pub mod agents;
pub mod config;
pub mod env;
pub mod fixture;
pub mod io;
pub mod metrics;
pub mod protocol;
pub mod rng;
pub mod schema;
pub mod sttg;
pub mod synth;
pub mod taskgen;
pub mod topology;
pub mod unionfind;
pub mod witness;
pub mod world;

pub use schema::{AttrValue, AttributeSchema};
pub use sttg::Sttg;
pub use taskgen::{Task, TaskSet};
pub use topology::Topology;
pub use world::World;
