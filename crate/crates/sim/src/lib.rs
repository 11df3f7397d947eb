//! Deterministic epoch-granular simulator of a bootstrapping-oriented FHE
//! accelerator.
//!
//! HE ops expand into per-limb task graphs (`graph`), which a list scheduler
//! runs over exclusive chip-wide resources (`engine`) while tracking
//! scratchpad residency. Durations are analytical; no polynomial math is
//! recomputed here.

pub mod config;
pub mod engine;
pub mod graph;
pub mod noc;
pub mod report;
pub mod trace;

pub use config::{ConfigError, HardwareConfig};
pub use engine::{simulate, simulate_graph};
pub use graph::{expand, ntt_stream, CostModel, HeOp, OpGraph, Resource, TaskKind};
pub use noc::{noc_transfer_time, NocStage};
pub use report::SimReport;
pub use trace::{ParseError, Trace, TraceError, TraceOp};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Level(String),
    #[error("unsupported op {0}")]
    UnsupportedOp(String),
    #[error("scratchpad capacity exceeded: op {op} needs {needed} bytes, {free} of {capacity} free")]
    Capacity {
        op: String,
        needed: u64,
        free: u64,
        capacity: u64,
    },
    #[error("NoC route is not a permutation")]
    Contention,
    #[error("invalid instance: {0}")]
    Instance(String),
}
