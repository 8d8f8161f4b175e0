//! Level-design partners: a Markov-chain baseline over a 2x2 neighbourhood
//! and the CNN agent that learns online from keep/delete feedback.

mod cnn;
mod feedback;
mod markov;
mod partner;
mod pretrain;
mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::level::LevelError;
use crate::net::{NetError, Volume};
use crate::tiles::TileId;

pub use cnn::{CnnAgent, CnnConfig, EpisodeEntry, FeedbackStep};
pub use feedback::{Blacklist, Outcome, Placement, Reuse, RewardEvent, LOCAL_REWARD};
pub use markov::{markov_propose, markov_train, Context, MarkovModel, Slot, DEFAULT_SMOOTHING, OUTCOMES};
pub use partner::{AgentKind, Partner};
pub use pretrain::{pretrain, PretrainConfig, PretrainReport};
pub use store::{load_agent, save_agent, AgentManifest, AGENT_FILE, BLACKLIST_FILE, MARKOV_FILE, NETWORK_FILE};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("level is {width} columns wide; at least 40 are required")]
    LevelTooNarrow { width: usize },
    #[error("({x},{y}) tile {tile} was not proposed by this agent this session")]
    UnknownAddition { x: usize, y: usize, tile: TileId },
    #[error("bad agent configuration: {0}")]
    BadConfig(String),
    #[error("bad agent checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One proposed addition. `x` is an absolute level column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Addition {
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    pub activation: f64,
}

impl Addition {
    pub fn placement(&self) -> Placement {
        Placement::new(self.x, self.y, self.tile)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentProposal<T = f32> {
    pub turn_id: u64,
    pub additions: Vec<Addition>,
    /// Raw 40x15x32 output; only the CNN agent has one.
    pub action_matrix: Option<Volume<T>>,
}
