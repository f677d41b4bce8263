//! Deterministic discrete-event simulator. A scenario file fixes the
//! sidechains, actors, faults and seed; the run produces a line-delimited
//! event log and a report folded from it.

pub mod audit;
pub mod config;
pub mod events;
pub mod report;
pub mod world;

use std::fmt::Display;

pub use audit::audit_world;
pub use config::{ConfigError, ScenarioConfig};
pub use events::{parse_jsonl, Event, EventLog, LogParseError, LogRecord, ParsedLog};
pub use report::{fold_report, ScReport, SimReport};
pub use world::{run_scenario, World};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invariant violated at step {step} (event {seq}): {}", details.join("; "))]
    InvariantViolation {
        step: u64,
        seq: u64,
        details: Vec<String>,
    },
    #[error("engine error: {0}")]
    Internal(String),
}

impl SimError {
    pub(crate) fn internal(e: impl Display) -> Self {
        SimError::Internal(e.to_string())
    }
}
