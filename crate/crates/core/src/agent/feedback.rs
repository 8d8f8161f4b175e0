use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::tiles::TileId;

/// Magnitude of the per-addition keep/delete reward.
pub const LOCAL_REWARD: f64 = 0.1;

/// An addition at absolute level coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
}

impl Placement {
    pub fn new(x: usize, y: usize, tile: TileId) -> Self {
        Self { x, y, tile }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Kept,
    Deleted,
}

impl Outcome {
    pub fn reward(self) -> f64 {
        match self {
            Outcome::Kept => LOCAL_REWARD,
            Outcome::Deleted => -LOCAL_REWARD,
        }
    }
}

/// End-of-session "would use again" ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Reuse {
    Positive,
    Negative,
}

impl Reuse {
    pub fn value(self) -> f64 {
        match self {
            Reuse::Positive => 1.0,
            Reuse::Negative => -1.0,
        }
    }
}

impl From<Reuse> for i8 {
    fn from(r: Reuse) -> i8 {
        match r {
            Reuse::Positive => 1,
            Reuse::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Reuse {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Reuse::Positive),
            -1 => Ok(Reuse::Negative),
            other => Err(format!("reuse ranking must be 1 or -1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardEvent {
    Kept { placement: Placement, turn_id: u64 },
    Deleted { placement: Placement, turn_id: u64 },
    EpisodeReuse { ranking: Reuse, turn_id: u64 },
}

impl RewardEvent {
    pub fn local(outcome: Outcome, placement: Placement, turn_id: u64) -> Self {
        match outcome {
            Outcome::Kept => RewardEvent::Kept { placement, turn_id },
            Outcome::Deleted => RewardEvent::Deleted { placement, turn_id },
        }
    }

    pub fn reward(&self) -> f64 {
        match self {
            RewardEvent::Kept { .. } => LOCAL_REWARD,
            RewardEvent::Deleted { .. } => -LOCAL_REWARD,
            RewardEvent::EpisodeReuse { ranking, .. } => ranking.value(),
        }
    }
}

/// Additions the human deleted this session; never proposed again.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blacklist {
    entries: BTreeSet<Placement>,
}

impl Blacklist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the entry was new.
    pub fn insert(&mut self, p: Placement) -> bool {
        self.entries.insert(p)
    }

    pub fn contains(&self, p: &Placement) -> bool {
        self.entries.contains(p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Placement> {
        self.entries.iter()
    }

    pub(crate) fn clear(&mut self) {
        self.entries.clear();
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.entries.iter().map(|p| serde_json::to_string(p).expect("placement serializes") + "\n").collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut b = Blacklist::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            b.insert(serde_json::from_str(line)?);
        }
        Ok(b)
    }
}
