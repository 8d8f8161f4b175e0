//! Agent checkpoint directories.
//!
//! ```text
//! agent.json       kind, policy configuration, seed
//! network.bin      network parameters and optimizer state (CNN only)
//! markov.json      context counts (Markov only)
//! blacklist.jsonl  one placement per line
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::net::{load_checkpoint, save_checkpoint, Architecture};

use super::{AgentError, AgentKind, Blacklist, CnnAgent, CnnConfig, MarkovModel, Partner};

pub const AGENT_FILE: &str = "agent.json";
pub const NETWORK_FILE: &str = "network.bin";
pub const MARKOV_FILE: &str = "markov.json";
pub const BLACKLIST_FILE: &str = "blacklist.jsonl";

const AGENT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentManifest {
    pub format_version: u32,
    pub kind: AgentKind,
    pub tau: f64,
    pub cap: usize,
    pub seed: u64,
}

pub fn save_agent(dir: &Path, partner: &Partner, seed: u64) -> Result<(), AgentError> {
    fs::create_dir_all(dir)?;
    let (tau, cap) = match partner {
        Partner::Cnn(a) => (a.config().tau, a.config().cap),
        Partner::Markov { cap, .. } => (CnnConfig::default().tau, *cap),
    };
    let manifest = AgentManifest { format_version: AGENT_FORMAT, kind: partner.kind(), tau, cap, seed };
    match partner {
        Partner::Cnn(a) => save_checkpoint(&dir.join(NETWORK_FILE), a.network(), a.optimizer())?,
        Partner::Markov { model, .. } => fs::write(dir.join(MARKOV_FILE), model.to_json())?,
    }
    fs::write(dir.join(BLACKLIST_FILE), partner.blacklist().to_jsonl())?;
    fs::write(dir.join(AGENT_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Loads a checkpoint directory. The stored blacklist is restored so a
/// session can resume.
pub fn load_agent(dir: &Path) -> Result<(Partner, AgentManifest), AgentError> {
    let bad = |what: String| AgentError::BadCheckpoint(format!("{}: {what}", dir.display()));
    let text = fs::read_to_string(dir.join(AGENT_FILE)).map_err(|e| bad(format!("{AGENT_FILE}: {e}")))?;
    let manifest: AgentManifest = serde_json::from_str(&text).map_err(|e| bad(format!("{AGENT_FILE}: {e}")))?;
    if manifest.format_version != AGENT_FORMAT {
        return Err(bad(format!("unsupported agent format {}", manifest.format_version)));
    }
    let blacklist = match fs::read_to_string(dir.join(BLACKLIST_FILE)) {
        Ok(t) => Blacklist::from_jsonl(&t).map_err(|e| bad(format!("{BLACKLIST_FILE}: {e}")))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Blacklist::new(),
        Err(e) => return Err(e.into()),
    };
    let partner = match manifest.kind {
        AgentKind::Cnn => {
            let (net, adam) = load_checkpoint::<f32>(&dir.join(NETWORK_FILE), &Architecture::agent())
                .map_err(|e| bad(e.to_string()))?;
            let config = CnnConfig { tau: manifest.tau, cap: manifest.cap };
            let mut agent = CnnAgent::from_network(net, Some(adam), config)?;
            agent.set_blacklist(blacklist);
            Partner::cnn(agent)
        }
        AgentKind::Markov => {
            let text = fs::read_to_string(dir.join(MARKOV_FILE)).map_err(|e| bad(format!("{MARKOV_FILE}: {e}")))?;
            let model = MarkovModel::from_json(&text).map_err(|e| bad(format!("{MARKOV_FILE}: {e}")))?;
            match Partner::markov(model, manifest.cap, manifest.seed)? {
                Partner::Markov { model, cap, seed, proposed, .. } => {
                    Partner::Markov { model, cap, seed, blacklist, proposed }
                }
                cnn => cnn,
            }
        }
    };
    Ok((partner, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{markov_train, Placement};
    use crate::{Level, TileId};

    #[test]
    fn markov_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut level = Level::new(40).unwrap();
        level.set(0, 14, Some(TileId::new(0).unwrap())).unwrap();
        let mut partner = Partner::markov(markov_train(&[level]).unwrap(), 7, 3).unwrap();
        if let Partner::Markov { blacklist, .. } = &mut partner {
            blacklist.insert(Placement::new(4, 5, TileId::new(6).unwrap()));
        }
        save_agent(dir.path(), &partner, 3).unwrap();
        let (loaded, manifest) = load_agent(dir.path()).unwrap();
        assert_eq!(manifest.kind, AgentKind::Markov);
        assert_eq!(manifest.cap, 7);
        assert_eq!(loaded.blacklist(), partner.blacklist());
    }

    #[test]
    fn missing_manifest_is_a_bad_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_agent(dir.path()), Err(AgentError::BadCheckpoint(_))));
    }
}
