//! CKKS instances, the analytic cost model, security lookup and the sweep.

mod instance;
mod model;
mod schedule;
mod security;
mod sweep;

pub use instance::{builtin_instances, CkksInstance};
pub use model::{
    amortized_mult_per_slot, complexity_share_bconv, complexity_share_bconv_at, evk_bytes_at_level,
    hmult_mod_mults, min_nttu, tmult_min_bound, ModMultCounts,
};
pub use schedule::{BootSchedule, BootSegment};
pub use security::SecurityTable;
pub use sweep::{best_at_security, sweep, SweepConfig, SweepRow, SWEEP_HEADER};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("bootstrapping schedule has no segments")]
    EmptySchedule,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error: {0}")]
    Parse(String),
}
