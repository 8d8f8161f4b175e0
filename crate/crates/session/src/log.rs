//! Session event log: one JSON object per line, in occurrence order.

use serde::{Deserialize, Serialize};

use morai_core::agent::{AgentKind, Outcome, Reuse};
use morai_core::level::{Author, Edit, EditKind};
use morai_core::{Level, TileId};

use crate::SessionError;

/// Who caused an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Human,
    Ai,
    System,
}

impl From<Author> for Actor {
    fn from(a: Author) -> Self {
        match a {
            Author::Human => Actor::Human,
            Author::Ai => Actor::Ai,
        }
    }
}

/// How a logged edit came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditSource {
    Human,
    Agent,
    RemoveButton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event_type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        width: usize,
        agent: AgentKind,
        tau: f64,
        cap: usize,
        seed: u64,
    },
    Edit {
        kind: EditKind,
        x: usize,
        y: usize,
        tile: TileId,
        source: EditSource,
    },
    AiTurn {
        focus_x: usize,
        origin_x: usize,
        additions: usize,
    },
    Feedback {
        x: usize,
        y: usize,
        tile: TileId,
        outcome: Outcome,
        reward: f64,
        /// Turn in which the addition was made.
        addition_turn: u64,
        origin_x: usize,
        /// Activation before the step and the step's target; absent for
        /// partners that do not learn.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        before: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        target: Option<f64>,
    },
    Explanation {
        x: usize,
        y: usize,
        tile: TileId,
        x0: usize,
        y0: usize,
        delta: f64,
        confidence: f64,
        max_filter: usize,
        text: String,
    },
    RemoveAiTurn {
        removed: usize,
    },
    LevelReset {
        width: usize,
    },
    EpisodeReward {
        ranking: Reuse,
        reward: f64,
        steps: usize,
    },
    SessionClosed {
        #[serde(default)]
        reuse_ranking: Option<Reuse>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub turn_id: u64,
    pub timestamp: u64,
    pub author: Actor,
    #[serde(flatten)]
    pub event: Event,
}

impl LogRecord {
    pub fn event_type(&self) -> &'static str {
        match self.event {
            Event::SessionCreated { .. } => "session_created",
            Event::Edit { .. } => "edit",
            Event::AiTurn { .. } => "ai_turn",
            Event::Feedback { .. } => "feedback",
            Event::Explanation { .. } => "explanation",
            Event::RemoveAiTurn { .. } => "remove_ai_turn",
            Event::LevelReset { .. } => "level_reset",
            Event::EpisodeReward { .. } => "episode_reward",
            Event::SessionClosed { .. } => "session_closed",
        }
    }

    /// The edit this record describes, if any.
    pub fn as_edit(&self) -> Option<Edit> {
        match self.event {
            Event::Edit { kind, x, y, tile, .. } => Some(Edit {
                kind,
                x,
                y,
                tile,
                author: match self.author {
                    Actor::Ai => Author::Ai,
                    _ => Author::Human,
                },
                turn_id: self.turn_id,
                timestamp: self.timestamp,
            }),
            _ => None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize") + "\n"
    }
}

pub fn to_jsonl(records: &[LogRecord]) -> String {
    records.iter().map(LogRecord::to_json_line).collect()
}

pub fn parse_jsonl(text: &str) -> Result<Vec<LogRecord>, SessionError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| SessionError::MalformedLog(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Rebuilds the final grid from the creation record, the edits and any
/// level resets.
pub fn replay(records: &[LogRecord]) -> Result<Level, SessionError> {
    let mut level = None;
    for r in records {
        match &r.event {
            Event::SessionCreated { width, .. } | Event::LevelReset { width } => {
                level = Some(Level::new(*width).map_err(|e| SessionError::MalformedLog(e.to_string()))?);
            }
            Event::Edit { .. } => {
                let lv =
                    level.as_mut().ok_or_else(|| SessionError::MalformedLog("edit before session_created".into()))?;
                let edit = r.as_edit().expect("edit record");
                lv.apply_edit(&edit).map_err(|e| SessionError::MalformedLog(format!("turn {}: {e}", r.turn_id)))?;
            }
            _ => {}
        }
    }
    level.ok_or_else(|| SessionError::MalformedLog("no session_created record".into()))
}
