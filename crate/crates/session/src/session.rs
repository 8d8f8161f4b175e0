use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use morai_core::agent::{save_agent, AgentKind, EpisodeEntry, FeedbackStep, Outcome, Partner, Placement, Reuse};
use morai_core::explain::{explain, Explanation};
use morai_core::level::{DEFAULT_LEVEL_WIDTH, MIN_SESSION_WIDTH};
use morai_core::{Author, Edit, EditKind, Level, TileId, TileManifest};

use crate::clock::Clock;
use crate::log::{self, Actor, EditSource, Event, LogRecord};
use crate::SessionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub width: usize,
    pub agent: AgentKind,
    pub tau: f64,
    pub cap: usize,
    pub seed: u64,
    /// Compute an explanation for every CNN addition.
    pub explanations: bool,
    /// Directory holding an agent checkpoint to start from instead of the
    /// service default.
    pub checkpoint: Option<PathBuf>,
    /// Save the agent next to the log when the session closes.
    pub save_checkpoint: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_LEVEL_WIDTH,
            agent: AgentKind::Cnn,
            tau: 0.5,
            cap: 15,
            seed: 0,
            explanations: true,
            checkpoint: None,
            save_checkpoint: false,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        if self.width < MIN_SESSION_WIDTH {
            return Err(SessionError::BadConfig(format!(
                "level width {} is below the minimum of {MIN_SESSION_WIDTH}",
                self.width
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(SessionError::BadConfig(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.cap == 0 {
            return Err(SessionError::BadConfig("cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// A human edit as submitted by a client; authorship is implied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRequest {
    pub kind: EditKind,
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
}

impl EditRequest {
    pub fn add(x: usize, y: usize, tile: TileId) -> Self {
        Self { kind: EditKind::Addition, x, y, tile }
    }

    pub fn delete(x: usize, y: usize, tile: TileId) -> Self {
        Self { kind: EditKind::Deletion, x, y, tile }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnResult {
    pub turn_id: u64,
    pub additions: Vec<Edit>,
    /// Activations aligned with `additions`.
    pub activations: Vec<f64>,
    /// Aligned with `additions` when explanations are on and the partner is
    /// the CNN; empty otherwise.
    pub explanations: Vec<Explanation>,
}

/// Bookkeeping for one AI addition.
#[derive(Debug, Clone)]
struct AiEntry {
    turn: u64,
    kept_confirmed: bool,
    deleted: bool,
}

#[derive(Debug)]
pub struct Session {
    id: String,
    config: SessionConfig,
    level: Level,
    agent: Partner,
    turn_counter: u64,
    last_ai_turn: Vec<Edit>,
    /// Edits since the level was last (re)created.
    ledger: Vec<Edit>,
    episode: Vec<EpisodeEntry>,
    entries: Vec<AiEntry>,
    /// Episode indices of AI tiles awaiting their kept confirmation.
    pending: Vec<usize>,
    /// AI tiles currently on the grid, by cell.
    ai_cells: HashMap<(usize, usize), usize>,
    status: Status,
    log: Vec<LogRecord>,
    clock: Box<dyn Clock>,
    manifest: Arc<TileManifest>,
}

impl Session {
    pub fn create(
        id: impl Into<String>,
        config: SessionConfig,
        agent: Partner,
        clock: Box<dyn Clock>,
        manifest: Arc<TileManifest>,
    ) -> Result<Self, SessionError> {
        config.validate()?;
        if agent.kind() != config.agent {
            return Err(SessionError::BadConfig(format!(
                "configured for a {} agent but given a {} agent",
                config.agent,
                agent.kind()
            )));
        }
        let id = id.into();
        let mut s = Self {
            level: Level::new(config.width)?,
            id: id.clone(),
            agent,
            turn_counter: 0,
            last_ai_turn: Vec::new(),
            ledger: Vec::new(),
            episode: Vec::new(),
            entries: Vec::new(),
            pending: Vec::new(),
            ai_cells: HashMap::new(),
            status: Status::Active,
            log: Vec::new(),
            clock,
            manifest,
            config,
        };
        let event = Event::SessionCreated {
            session_id: id,
            width: s.config.width,
            agent: s.config.agent,
            tau: s.config.tau,
            cap: s.config.cap,
            seed: s.config.seed,
        };
        s.record(Actor::System, event);
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    pub fn agent(&self) -> &Partner {
        &self.agent
    }

    pub fn turn_counter(&self) -> u64 {
        self.turn_counter
    }

    pub fn last_ai_turn(&self) -> &[Edit] {
        &self.last_ai_turn
    }

    pub fn ledger(&self) -> &[Edit] {
        &self.ledger
    }

    pub fn episode(&self) -> &[EpisodeEntry] {
        &self.episode
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn export_log(&self) -> String {
        log::to_jsonl(&self.log)
    }

    pub fn level_text(&self) -> String {
        self.level.to_text(&self.manifest)
    }

    fn record(&mut self, author: Actor, event: Event) {
        let timestamp = self.clock.now_ms();
        self.log.push(LogRecord { turn_id: self.turn_counter, timestamp, author, event });
    }

    fn ensure_active(&self) -> Result<(), SessionError> {
        match self.status {
            Status::Active => Ok(()),
            Status::Closed => Err(SessionError::SessionClosed),
        }
    }

    fn stamp(&self, mut edit: Edit) -> Edit {
        edit.turn_id = self.turn_counter;
        edit.timestamp = self.clock.now_ms();
        edit
    }

    fn log_edit(&mut self, edit: &Edit, source: EditSource) {
        self.ledger.push(*edit);
        self.log.push(LogRecord {
            turn_id: edit.turn_id,
            timestamp: edit.timestamp,
            author: edit.author.into(),
            event: Event::Edit { kind: edit.kind, x: edit.x, y: edit.y, tile: edit.tile, source },
        });
    }

    fn give_feedback(&mut self, idx: usize, outcome: Outcome) -> Result<Option<FeedbackStep>, SessionError> {
        let entry = &self.episode[idx];
        let (placement, origin_x) = (entry.placement, entry.window.origin_x);
        let step = self.agent.feedback(placement, outcome, &self.episode[idx].window)?;
        let event = Event::Feedback {
            x: placement.x,
            y: placement.y,
            tile: placement.tile,
            outcome,
            reward: outcome.reward(),
            addition_turn: self.entries[idx].turn,
            origin_x,
            before: step.map(|s| s.before),
            target: step.map(|s| s.target),
        };
        self.record(Actor::System, event);
        Ok(step)
    }

    /// An AI tile left the grid at the human's hand.
    fn ai_tile_deleted(&mut self, idx: usize) -> Result<(), SessionError> {
        self.entries[idx].deleted = true;
        self.episode[idx].kept = false;
        self.pending.retain(|&p| p != idx);
        self.give_feedback(idx, Outcome::Deleted)?;
        Ok(())
    }

    /// Applies a batch of human edits atomically. Deleting an AI tile
    /// triggers deleted feedback and blacklists the triple. Returns the turn
    /// id the edits were stamped with.
    pub fn submit_human_edits(&mut self, edits: &[EditRequest]) -> Result<u64, SessionError> {
        self.ensure_active()?;
        let mut scratch = self.level.clone();
        for e in edits {
            scratch.apply_edit(&Edit {
                kind: e.kind,
                x: e.x,
                y: e.y,
                tile: e.tile,
                author: Author::Human,
                turn_id: 0,
                timestamp: 0,
            })?;
        }
        self.level = scratch;
        for e in edits {
            let edit = self.stamp(Edit {
                kind: e.kind,
                x: e.x,
                y: e.y,
                tile: e.tile,
                author: Author::Human,
                turn_id: 0,
                timestamp: 0,
            });
            self.log_edit(&edit, EditSource::Human);
            if e.kind == EditKind::Deletion {
                if let Some(idx) = self.ai_cells.remove(&(e.x, e.y)) {
                    self.ai_tile_deleted(idx)?;
                }
            }
        }
        Ok(self.turn_counter)
    }

    /// Confirms surviving AI additions as kept, then queries the partner
    /// for the window around `focus_x` and applies its additions.
    pub fn end_turn(&mut self, focus_x: usize) -> Result<TurnResult, SessionError> {
        self.ensure_active()?;
        let window = self.level.extract_window(focus_x)?;
        self.confirm_pending()?;

        let turn_id = self.turn_counter;
        let proposal = self.agent.propose(&window, turn_id)?;
        let mut scratch = self.level.clone();
        for a in &proposal.additions {
            scratch.apply_edit(&Edit::add(a.x, a.y, a.tile, Author::Ai))?;
        }
        let explanations = match (&self.agent, self.config.explanations) {
            (Partner::Cnn(cnn), true) => proposal
                .additions
                .iter()
                .map(|a| explain(cnn.network(), &window, a.x - window.origin_x, a.y, a.tile, &self.manifest))
                .collect::<Result<Vec<_>, _>>()
                .map_err(morai_core::agent::AgentError::from)?,
            _ => Vec::new(),
        };

        self.level = scratch;
        self.record(
            Actor::Ai,
            Event::AiTurn { focus_x, origin_x: window.origin_x, additions: proposal.additions.len() },
        );
        let mut additions = Vec::with_capacity(proposal.additions.len());
        for a in &proposal.additions {
            let edit = self.stamp(Edit::add(a.x, a.y, a.tile, Author::Ai));
            self.log_edit(&edit, EditSource::Agent);
            let idx = self.episode.len();
            self.episode.push(EpisodeEntry { window: window.clone(), placement: a.placement(), kept: true });
            self.entries.push(AiEntry { turn: turn_id, kept_confirmed: false, deleted: false });
            self.pending.push(idx);
            self.ai_cells.insert((edit.x, edit.y), idx);
            additions.push(edit);
        }
        for e in &explanations {
            let event = Event::Explanation {
                x: e.x,
                y: e.y,
                tile: e.tile,
                x0: e.x0,
                y0: e.y0,
                delta: e.delta,
                confidence: e.confidence,
                max_filter: e.max_filter,
                text: e.text.clone(),
            };
            self.record(Actor::Ai, event);
        }
        self.last_ai_turn = additions.clone();
        self.turn_counter += 1;
        Ok(TurnResult {
            turn_id,
            activations: proposal.additions.iter().map(|a| a.activation).collect(),
            additions,
            explanations,
        })
    }

    fn confirm_pending(&mut self) -> Result<(), SessionError> {
        for idx in std::mem::take(&mut self.pending) {
            if !self.entries[idx].deleted && !self.entries[idx].kept_confirmed {
                self.entries[idx].kept_confirmed = true;
                self.give_feedback(idx, Outcome::Kept)?;
            }
        }
        Ok(())
    }

    /// Deletes whatever is left of the last AI turn. Deletions are logged as
    /// human edits and each one is deleted feedback.
    pub fn remove_last_ai_turn(&mut self) -> Result<Vec<Edit>, SessionError> {
        self.ensure_active()?;
        if self.last_ai_turn.is_empty() {
            return Err(SessionError::NothingToRemove);
        }
        let mut removed = Vec::new();
        for added in std::mem::take(&mut self.last_ai_turn) {
            let Some(&idx) = self.ai_cells.get(&(added.x, added.y)) else { continue };
            if self.episode[idx].placement != Placement::new(added.x, added.y, added.tile) {
                continue;
            }
            let edit = self.stamp(Edit::delete(added.x, added.y, added.tile, Author::Human));
            self.level.apply_edit(&edit)?;
            self.ai_cells.remove(&(added.x, added.y));
            self.log_edit(&edit, EditSource::RemoveButton);
            self.ai_tile_deleted(idx)?;
            removed.push(edit);
        }
        Ok(removed)
    }

    /// Starts a fresh level with the same partner. AI tiles still on the
    /// old level count as kept.
    pub fn reset_level(&mut self) -> Result<(), SessionError> {
        self.ensure_active()?;
        self.confirm_pending()?;
        self.level = Level::new(self.config.width)?;
        self.ledger.clear();
        self.ai_cells.clear();
        self.last_ai_turn.clear();
        self.record(Actor::Human, Event::LevelReset { width: self.config.width });
        Ok(())
    }

    /// Applies the terminal reward if a ranking is given, clears the
    /// session-scoped agent state and, with a sessions directory, writes
    /// the log (and optionally the agent). Returns the log path.
    pub fn close(
        &mut self,
        ranking: Option<Reuse>,
        sessions_dir: Option<&Path>,
    ) -> Result<Option<PathBuf>, SessionError> {
        self.ensure_active()?;
        if let Some(r) = ranking {
            let steps = self.agent.apply_episode_reward(r, &self.episode)?;
            self.record(Actor::System, Event::EpisodeReward { ranking: r, reward: r.value(), steps: steps.len() });
        }
        self.record(Actor::Human, Event::SessionClosed { reuse_ranking: ranking });
        self.status = Status::Closed;
        self.agent.end_session();
        match sessions_dir {
            Some(dir) => Ok(Some(self.persist(dir)?)),
            None => Ok(None),
        }
    }

    fn persist(&self, dir: &Path) -> Result<PathBuf, SessionError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.jsonl", self.id));
        std::fs::write(&path, self.export_log())?;
        if self.config.save_checkpoint {
            save_agent(&dir.join(format!("{}.agent", self.id)), &self.agent, self.config.seed)?;
        }
        Ok(path)
    }
}
