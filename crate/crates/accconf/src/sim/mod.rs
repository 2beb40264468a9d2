//! Deterministic discrete-event simulator of content delivery over an ICN.
//!
//! Synthetic two-layer topologies (Waxman between autonomous systems,
//! Barabási-Albert inside each), LRU-caching routers, Zipf-Mandelbrot
//! client workloads, and three client stacks: the access-control stack
//! that fetches an enabling block before each object, plain named-data
//! caching, and a no-cache baseline that only the provider can answer.
//!
//! Single-threaded per run; identical seeds produce identical reports.

mod engine;
mod lru;
mod report;
mod topology;
mod workload;

pub use engine::{run_from_config, run_simulation, SimConfig, Stack, WorkloadSpec};
pub use lru::LruCache;
pub use report::{ClientReport, RouterReport, SimReport};
pub use topology::{generate_topology, hop_distances, Link, NodeId, NodeKind, TopoSpec, Topology};
pub use workload::ZipfMandelbrot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
