use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::level::{action_coords, action_index, Window, LEVEL_HEIGHT, WINDOW_WIDTH};
use crate::net::{AdamConfig, AdamState, Architecture, Network, Volume};
use crate::scalar::Scalar;

use super::{Addition, AgentError, AgentProposal, Blacklist, Outcome, Placement, Reuse, LOCAL_REWARD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// Activation threshold for proposing an addition.
    pub tau: f64,
    /// Most additions per turn.
    pub cap: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self { tau: 0.5, cap: 15 }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(AgentError::BadConfig(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.cap == 0 {
            return Err(AgentError::BadConfig("per-turn cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// One AI addition of a session, with the window it was proposed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub window: Window,
    pub placement: Placement,
    pub kept: bool,
}

/// What a single feedback step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackStep {
    pub before: f64,
    pub target: f64,
    pub loss: f64,
}

/// The adaptive partner: network, optimizer, and this session's blacklist.
#[derive(Debug, Clone)]
pub struct CnnAgent<T: Scalar = f32> {
    network: Network<T>,
    adam: AdamState<T>,
    blacklist: Blacklist,
    config: CnnConfig,
    proposed: HashSet<Placement>,
}

impl<T: Scalar> CnnAgent<T> {
    /// Freshly initialised agent.
    pub fn new(config: CnnConfig, seed: u64) -> Result<Self, AgentError> {
        Self::from_network(Network::new(Architecture::agent(), seed), None, config)
    }

    /// Wraps an existing network; a missing optimizer state starts at step 0.
    pub fn from_network(
        network: Network<T>,
        adam: Option<AdamState<T>>,
        config: CnnConfig,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        if network.architecture() != &Architecture::agent() {
            return Err(AgentError::BadCheckpoint(format!(
                "network architecture {:?} is not the agent architecture",
                network.architecture()
            )));
        }
        let adam = match adam {
            Some(a) if a.compatible_with(&network) => a,
            Some(_) => return Err(AgentError::BadCheckpoint("optimizer state does not match network".into())),
            None => AdamState::new(&network, AdamConfig::default())?,
        };
        Ok(Self { network, adam, blacklist: Blacklist::new(), config, proposed: HashSet::new() })
    }

    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    /// Direct parameter access, for tests and tools.
    pub fn network_mut(&mut self) -> &mut Network<T> {
        &mut self.network
    }

    pub fn optimizer(&self) -> &AdamState<T> {
        &self.adam
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Network<T>, &mut AdamState<T>) {
        (&mut self.network, &mut self.adam)
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: CnnConfig) -> Result<(), AgentError> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    pub fn blacklist(&self) -> &Blacklist {
        &self.blacklist
    }

    pub(crate) fn set_blacklist(&mut self, blacklist: Blacklist) {
        self.blacklist = blacklist;
    }

    /// Forgets the blacklist and the record of proposals. Learned
    /// parameters persist.
    pub fn end_session(&mut self) {
        self.blacklist.clear();
        self.proposed.clear();
    }

    pub fn action_matrix(&self, window: &Window) -> Result<Volume<T>, AgentError> {
        Ok(self.network.forward(&window.to_tensor())?)
    }

    /// Current activation for a window-relative `(x, y, tile)`.
    pub fn activation(&self, window: &Window, x: usize, y: usize, tile: crate::TileId) -> Result<T, AgentError> {
        Ok(self.network.forward_at(&window.to_tensor(), &[action_index(x, y, tile)])?[0])
    }

    /// Thresholded, capped, blacklist-filtered additions for `window`.
    pub fn propose(&mut self, window: &Window, turn_id: u64) -> Result<AgentProposal<T>, AgentError> {
        let matrix = self.action_matrix(window)?;
        let additions = select_additions(&matrix, window, &self.blacklist, &self.config);
        self.proposed.extend(additions.iter().map(Addition::placement));
        Ok(AgentProposal { turn_id, additions, action_matrix: Some(matrix) })
    }

    /// Marks a placement as proposed without running the network, e.g. when
    /// a session is restored from its log.
    pub fn remember_proposal(&mut self, placement: Placement) {
        self.proposed.insert(placement);
    }

    /// One masked step at the addition's action index toward the current
    /// activation plus the local reward, clamped to [0, 1]. Deleted
    /// additions are blacklisted.
    pub fn feedback(
        &mut self,
        placement: Placement,
        outcome: Outcome,
        window: &Window,
    ) -> Result<FeedbackStep, AgentError> {
        if !self.proposed.contains(&placement) {
            return Err(AgentError::UnknownAddition { x: placement.x, y: placement.y, tile: placement.tile });
        }
        let step = self.reinforce(window, placement, outcome.reward())?;
        if outcome == Outcome::Deleted {
            self.blacklist.insert(placement);
        }
        Ok(step)
    }

    /// Replays the session's kept additions under the terminal reward.
    pub fn apply_episode_reward(
        &mut self,
        ranking: Reuse,
        episode: &[EpisodeEntry],
    ) -> Result<Vec<FeedbackStep>, AgentError> {
        episode
            .iter()
            .filter(|e| e.kept)
            .map(|e| self.reinforce(&e.window, e.placement, LOCAL_REWARD * ranking.value()))
            .collect()
    }

    fn reinforce(&mut self, window: &Window, placement: Placement, reward: f64) -> Result<FeedbackStep, AgentError> {
        if !window.contains_column(placement.x) || placement.y >= LEVEL_HEIGHT {
            return Err(AgentError::BadConfig(format!(
                "addition at column {} lies outside the window starting at {}",
                placement.x, window.origin_x
            )));
        }
        let index = action_index(placement.x - window.origin_x, placement.y, placement.tile);
        let input = window.to_tensor();
        let before = self.network.forward_at(&input, &[index])?[0];
        let before_f = before.to_f64().unwrap_or(f64::NAN);
        let target = T::from_f64_lossy((before_f + reward).clamp(0.0, 1.0));
        let (loss, grads) = self.network.backward_sparse(&input, &[(index, target)])?;
        self.adam.step(&mut self.network, &grads)?;
        Ok(FeedbackStep {
            before: before_f,
            target: target.to_f64().unwrap_or(f64::NAN),
            loss: loss.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Candidates above `tau` at empty, non-blacklisted cells; the `cap`
/// strongest, ties broken by lowest `(x, y, tile)`. A cell takes at most
/// one tile, the first in that order.
pub(crate) fn select_additions<T: Scalar>(
    matrix: &Volume<T>,
    window: &Window,
    blacklist: &Blacklist,
    config: &CnnConfig,
) -> Vec<Addition> {
    let mut candidates: Vec<(usize, f64)> = matrix
        .data()
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| {
            let a = a.to_f64()?;
            (a > config.tau).then_some((i, a))
        })
        .filter(|&(i, _)| {
            let (x, y, tile) = action_coords(i);
            x < WINDOW_WIDTH
                && window.get(x, y).is_none()
                && !blacklist.contains(&Placement::new(window.origin_x + x, y, tile))
        })
        .collect();
    // Flat indices already order by (x, y, tile).
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut taken = std::collections::HashSet::new();
    candidates
        .into_iter()
        .filter_map(|(i, activation)| {
            let (x, y, tile) = action_coords(i);
            taken.insert((x, y)).then_some(Addition { x: window.origin_x + x, y, tile, activation })
        })
        .take(config.cap)
        .collect()
}
