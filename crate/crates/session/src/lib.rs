//! Turn-based co-creative editing sessions: human edit batches, End-Turn
//! agent invocation, the Remove button, keep/delete feedback, an event log
//! that replays to the level, and the HTTP+JSON service around them.

pub mod clock;
pub mod http;
pub mod log;
pub mod manager;
pub mod session;

use thiserror::Error;

use morai_core::agent::AgentError;
use morai_core::LevelError;

pub use clock::{Clock, LogicalClock, SystemClock};
pub use log::{Actor, EditSource, Event, LogRecord};
pub use manager::{ClockMode, SessionManager, Templates};
pub use session::{EditRequest, Session, SessionConfig, Status, TurnResult};

/// Version of the HTTP+JSON protocol documented in docs/protocol.md.
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session is closed")]
    SessionClosed,
    #[error("the last AI turn has nothing left to remove")]
    NothingToRemove,
    #[error("bad session configuration: {0}")]
    BadConfig(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("no session with id {0:?}")]
    NotFound(String),
    #[error("session state was lost to an earlier panic")]
    Poisoned,
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
