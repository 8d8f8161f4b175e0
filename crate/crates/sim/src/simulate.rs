use std::sync::Arc;

use serde::{Deserialize, Serialize};

use morai_core::agent::{CnnConfig, Partner, Reuse};
use morai_core::level::DEFAULT_LEVEL_WIDTH;
use morai_core::TileManifest;
use morai_session::{EditRequest, LogRecord, LogicalClock, Session, SessionConfig};

use crate::metrics::{adaptation_metrics, AdaptationReport};
use crate::persona::{Persona, PersonaRun};
use crate::SimError;

/// Late deletion ratio below which a simulated designer would reuse the
/// partner.
pub const REUSE_THRESHOLD: f64 = 0.5;

/// Proposal threshold for CNN partners in simulation. Every deletion step
/// also lowers the network's other confident outputs through the shared
/// convolutional features, so at the interactive default of 0.5 a partner
/// goes silent after a few heavily rejected turns and its adaptation
/// becomes unmeasurable.
pub const SIM_TAU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub turns: usize,
    pub width: usize,
    /// Explanations cost several forward passes per addition and do not
    /// affect the agent, so simulations skip them unless asked.
    pub explanations: bool,
    /// Overrides a CNN partner's threshold; `None` keeps the partner's own.
    pub tau: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { turns: 30, width: DEFAULT_LEVEL_WIDTH, explanations: false, tau: Some(SIM_TAU) }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub records: Vec<LogRecord>,
    pub report: AdaptationReport,
    pub ranking: Option<Reuse>,
    /// The partner after the session, learned parameters included.
    pub partner: Partner,
}

/// Runs one persona-driven session. Each turn the persona places its
/// edits, the partner takes its turn around the persona's last edit, and
/// the persona deletes the additions it dislikes. The session closes with
/// a reuse ranking derived from the late deletion ratio. Identical inputs
/// give identical logs.
pub fn simulate_session(
    persona: &Persona,
    partner: Partner,
    config: &SimConfig,
    seed: u64,
) -> Result<SimOutcome, SimError> {
    if config.turns == 0 {
        return Err(SimError::BadConfig("turns must be at least 1".into()));
    }
    let mut partner = partner;
    if let (Partner::Cnn(agent), Some(tau)) = (&mut partner, config.tau) {
        let cap = agent.config().cap;
        agent.set_config(CnnConfig { tau, cap }).map_err(|e| SimError::BadConfig(e.to_string()))?;
    }
    let (tau, cap) = match &partner {
        Partner::Cnn(a) => (a.config().tau, a.config().cap),
        Partner::Markov { cap, .. } => (SessionConfig::default().tau, *cap),
    };
    let session_config = SessionConfig {
        width: config.width,
        agent: partner.kind(),
        tau,
        cap,
        seed,
        explanations: config.explanations,
        checkpoint: None,
        save_checkpoint: false,
    };
    let manifest = Arc::new(TileManifest::builtin());
    let id = format!("sim-{}-{}-{seed}", persona.name(), partner.kind());
    let mut session = Session::create(id, session_config, partner, Box::<LogicalClock>::default(), manifest)?;
    let mut run = PersonaRun::new(persona, seed);

    for _ in 0..config.turns {
        let edits = run.edits(session.level());
        if !edits.is_empty() {
            session.submit_human_edits(&edits)?;
        }
        let turn = session.end_turn(run.focus_x())?;
        let rejected: Vec<EditRequest> = turn
            .additions
            .iter()
            .filter(|e| !persona.keeps(e.x, e.y, e.tile, session.level()))
            .map(|e| EditRequest::delete(e.x, e.y, e.tile))
            .collect();
        if !rejected.is_empty() {
            session.submit_human_edits(&rejected)?;
        }
    }

    let before_close = adaptation_metrics(session.records())?;
    let ranking = before_close.late_ratio.map(|r| if r < REUSE_THRESHOLD { Reuse::Positive } else { Reuse::Negative });
    session.close(ranking, None)?;
    let records = session.records().to_vec();
    let report = adaptation_metrics(&records)?;
    Ok(SimOutcome { records, report, ranking, partner: session.agent().clone() })
}
