//! Pairs simulated runs of two partners into per-run rankings, the shape
//! the rank-sum tables consume.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use morai_core::agent::{AgentKind, Reuse};
use morai_core::stats::RankingRecord;

use crate::metrics::AdaptationReport;
use crate::SimError;

pub const FEWER_DELETIONS: &str = "fewer_deletions";
pub const WOULD_REUSE: &str = "would_reuse";

/// What `simulate` writes for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub persona: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub turns: usize,
    pub ranking: Option<Reuse>,
    pub report: AdaptationReport,
}

/// Lower is better; `None` counts as worst.
fn cmp_ratio(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    let key = |r: Option<f64>| r.unwrap_or(f64::INFINITY);
    key(a).total_cmp(&key(b))
}

fn reuse_score(r: Option<Reuse>) -> i8 {
    r.map_or(0, i8::from)
}

/// For every (persona, seed) with both a CNN and a Markov run, one record
/// per feature naming the partner ranked first. Ties go to the CNN on even
/// seeds and to the Markov chain on odd ones, so they split evenly rather
/// than favour either partner.
pub fn pair_runs(runs: &[RunSummary]) -> Result<Vec<RankingRecord>, SimError> {
    let mut by_key: BTreeMap<(String, u64), (Option<&RunSummary>, Option<&RunSummary>)> = BTreeMap::new();
    for r in runs {
        let slot = by_key.entry((r.persona.clone(), r.seed)).or_default();
        let target = match r.agent {
            AgentKind::Cnn => &mut slot.0,
            AgentKind::Markov => &mut slot.1,
        };
        if target.replace(r).is_some() {
            return Err(SimError::MalformedLog(format!(
                "two {} runs for persona {} seed {}",
                r.agent, r.persona, r.seed
            )));
        }
    }
    let (cnn, markov) = (AgentKind::Cnn.to_string(), AgentKind::Markov.to_string());
    let mut records = Vec::new();
    for ((_, seed), pair) in by_key {
        let (Some(c), Some(m)) = pair else { continue };
        let tie_winner = if seed % 2 == 0 { &cnn } else { &markov };
        let pick = |ord: std::cmp::Ordering| match ord {
            std::cmp::Ordering::Less => cnn.clone(),
            std::cmp::Ordering::Greater => markov.clone(),
            std::cmp::Ordering::Equal => tie_winner.clone(),
        };
        let deletions = pick(cmp_ratio(c.report.aggregate_ratio, m.report.aggregate_ratio));
        let reuse = pick(
            reuse_score(m.ranking)
                .cmp(&reuse_score(c.ranking))
                .then(cmp_ratio(c.report.late_ratio, m.report.late_ratio)),
        );
        for (feature, first) in [(FEWER_DELETIONS, deletions), (WOULD_REUSE, reuse)] {
            records.push(RankingRecord {
                agent_a: cnn.clone(),
                agent_b: markov.clone(),
                feature: feature.into(),
                first,
            });
        }
    }
    if records.is_empty() {
        return Err(SimError::MalformedLog("no persona and seed was run with both partners".into()));
    }
    Ok(records)
}
