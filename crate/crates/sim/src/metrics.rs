use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use morai_core::agent::{Outcome, Placement};
use morai_core::EditKind;
use morai_session::{Actor, Event, LogRecord};

use crate::SimError;

/// Turns pooled into the early and late ratios.
pub const WINDOW_TURNS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnStat {
    pub turn_id: u64,
    pub additions: usize,
    pub deleted: usize,
    /// `None` when the turn added nothing.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub ai_additions: usize,
    pub ai_deletions: usize,
    pub human_additions: usize,
    pub human_deletions: usize,
    /// AI additions that later received deleted feedback.
    pub ai_additions_deleted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationReport {
    /// One entry per AI turn, in order.
    pub turns: Vec<TurnStat>,
    /// Pooled over the first five AI turns; `None` if they added nothing.
    pub early_ratio: Option<f64>,
    /// Pooled over the last five AI turns; `None` if they added nothing.
    pub late_ratio: Option<f64>,
    pub aggregate_ratio: Option<f64>,
    pub totals: Totals,
}

fn ratio(deleted: usize, additions: usize) -> Option<f64> {
    (additions > 0).then(|| deleted as f64 / additions as f64)
}

fn pooled<'a>(turns: impl Iterator<Item = &'a TurnStat>) -> Option<f64> {
    let (d, a) = turns.fold((0, 0), |(d, a), t| (d + t.deleted, a + t.additions));
    ratio(d, a)
}

/// Deletion ratios per AI turn and pooled. Turn sizes come from the turn
/// records and deletions from deleted-feedback events, so the report never
/// depends on re-deriving authorship from the edit stream.
pub fn adaptation_metrics(records: &[LogRecord]) -> Result<AdaptationReport, SimError> {
    if !matches!(records.first().map(|r| &r.event), Some(Event::SessionCreated { .. })) {
        return Err(SimError::MalformedLog("log does not start with session_created".into()));
    }
    let mut turns: BTreeMap<u64, TurnStat> = BTreeMap::new();
    let mut deleted_seen: HashSet<(u64, Placement)> = HashSet::new();
    let mut totals = Totals::default();
    for r in records {
        match &r.event {
            Event::AiTurn { additions, .. } => {
                if turns
                    .insert(r.turn_id, TurnStat { turn_id: r.turn_id, additions: *additions, deleted: 0, ratio: None })
                    .is_some()
                {
                    return Err(SimError::MalformedLog(format!("two AI turns with id {}", r.turn_id)));
                }
            }
            Event::Feedback { x, y, tile, outcome: Outcome::Deleted, addition_turn, .. } => {
                let turn = turns
                    .get_mut(addition_turn)
                    .ok_or_else(|| SimError::MalformedLog(format!("feedback for unknown AI turn {addition_turn}")))?;
                if deleted_seen.insert((*addition_turn, Placement::new(*x, *y, *tile))) {
                    turn.deleted += 1;
                    totals.ai_additions_deleted += 1;
                }
                if turn.deleted > turn.additions {
                    return Err(SimError::MalformedLog(format!(
                        "turn {addition_turn} has more deletions than additions"
                    )));
                }
            }
            Event::Edit { kind, .. } => {
                let slot = match (r.author, kind) {
                    (Actor::Ai, EditKind::Addition) => &mut totals.ai_additions,
                    (Actor::Ai, EditKind::Deletion) => &mut totals.ai_deletions,
                    (_, EditKind::Addition) => &mut totals.human_additions,
                    (_, EditKind::Deletion) => &mut totals.human_deletions,
                };
                *slot += 1;
            }
            _ => {}
        }
    }
    let mut turns: Vec<TurnStat> = turns.into_values().collect();
    for t in &mut turns {
        t.ratio = ratio(t.deleted, t.additions);
    }
    let early_ratio = pooled(turns.iter().take(WINDOW_TURNS));
    let late_ratio = pooled(turns.iter().skip(turns.len().saturating_sub(WINDOW_TURNS)));
    let aggregate_ratio = pooled(turns.iter());
    Ok(AdaptationReport { turns, early_ratio, late_ratio, aggregate_ratio, totals })
}
