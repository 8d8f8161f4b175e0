//! Headless persona-driven sessions that stand in for human designers,
//! the deletion-ratio metrics that measure a partner's adaptation, and the
//! pairing of simulated runs into ranking studies.

pub mod metrics;
pub mod persona;
pub mod simulate;
pub mod study;

use thiserror::Error;

use morai_core::stats::StatsError;
use morai_session::SessionError;

pub use metrics::{adaptation_metrics, AdaptationReport, Totals, TurnStat};
pub use persona::{Persona, PersonaRun, PersonaSpec, PlacementPolicy};
pub use simulate::{simulate_session, SimConfig, SimOutcome, REUSE_THRESHOLD, SIM_TAU};
pub use study::{pair_runs, RunSummary};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad persona: {0}")]
    BadPersona(String),
    #[error("bad simulation config: {0}")]
    BadConfig(String),
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
