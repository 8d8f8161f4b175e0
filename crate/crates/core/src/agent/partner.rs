use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::level::Window;

use super::{
    markov_propose, Addition, AgentError, AgentProposal, Blacklist, CnnAgent, EpisodeEntry, FeedbackStep, MarkovModel,
    Outcome, Placement, Reuse,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Cnn,
    Markov,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Cnn => "cnn",
            AgentKind::Markov => "markov",
        })
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cnn" => Ok(AgentKind::Cnn),
            "markov" => Ok(AgentKind::Markov),
            other => Err(format!("unknown agent kind {other:?} (expected cnn or markov)")),
        }
    }
}

/// Either partner behind one interface. The Markov chain does not learn;
/// it only honours the blacklist.
#[derive(Debug, Clone)]
pub enum Partner {
    Cnn(Box<CnnAgent<f32>>),
    Markov { model: MarkovModel, cap: usize, seed: u64, blacklist: Blacklist, proposed: HashSet<Placement> },
}

impl Partner {
    pub fn cnn(agent: CnnAgent<f32>) -> Self {
        Partner::Cnn(Box::new(agent))
    }

    pub fn markov(model: MarkovModel, cap: usize, seed: u64) -> Result<Self, AgentError> {
        if cap == 0 {
            return Err(AgentError::BadConfig("per-turn cap must be at least 1".into()));
        }
        Ok(Partner::Markov { model, cap, seed, blacklist: Blacklist::new(), proposed: HashSet::new() })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Partner::Cnn(_) => AgentKind::Cnn,
            Partner::Markov { .. } => AgentKind::Markov,
        }
    }

    pub fn as_cnn(&self) -> Option<&CnnAgent<f32>> {
        match self {
            Partner::Cnn(a) => Some(a),
            Partner::Markov { .. } => None,
        }
    }

    pub fn blacklist(&self) -> &Blacklist {
        match self {
            Partner::Cnn(a) => a.blacklist(),
            Partner::Markov { blacklist, .. } => blacklist,
        }
    }

    pub fn propose(&mut self, window: &Window, turn_id: u64) -> Result<AgentProposal<f32>, AgentError> {
        match self {
            Partner::Cnn(a) => a.propose(window, turn_id),
            Partner::Markov { model, cap, seed, blacklist, proposed } => {
                let turn_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ turn_id;
                let p = markov_propose(model, window, *cap, turn_seed, blacklist, turn_id);
                proposed.extend(p.additions.iter().map(Addition::placement));
                Ok(p)
            }
        }
    }

    pub fn remember_proposal(&mut self, placement: Placement) {
        match self {
            Partner::Cnn(a) => a.remember_proposal(placement),
            Partner::Markov { proposed, .. } => {
                proposed.insert(placement);
            }
        }
    }

    /// Returns the training step taken, if the partner learns.
    pub fn feedback(
        &mut self,
        placement: Placement,
        outcome: Outcome,
        window: &Window,
    ) -> Result<Option<FeedbackStep>, AgentError> {
        match self {
            Partner::Cnn(a) => a.feedback(placement, outcome, window).map(Some),
            Partner::Markov { blacklist, proposed, .. } => {
                if !proposed.contains(&placement) {
                    return Err(AgentError::UnknownAddition { x: placement.x, y: placement.y, tile: placement.tile });
                }
                if outcome == Outcome::Deleted {
                    blacklist.insert(placement);
                }
                Ok(None)
            }
        }
    }

    pub fn apply_episode_reward(
        &mut self,
        ranking: Reuse,
        episode: &[EpisodeEntry],
    ) -> Result<Vec<FeedbackStep>, AgentError> {
        match self {
            Partner::Cnn(a) => a.apply_episode_reward(ranking, episode),
            Partner::Markov { .. } => Ok(Vec::new()),
        }
    }

    pub fn end_session(&mut self) {
        match self {
            Partner::Cnn(a) => a.end_session(),
            Partner::Markov { blacklist, proposed, .. } => {
                blacklist.clear();
                proposed.clear();
            }
        }
    }
}
