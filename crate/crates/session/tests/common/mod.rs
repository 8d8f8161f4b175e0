#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use morai_core::agent::AgentKind;
use morai_core::agent::{markov_train, CnnAgent, CnnConfig, MarkovModel, Partner};
use morai_core::net::{Architecture, Network};
use morai_core::{Level, TileId, TileManifest};
use morai_session::{LogicalClock, Session, SessionConfig};

pub fn t(id: u8) -> TileId {
    TileId::new(id).unwrap()
}

pub fn toy_corpus() -> Vec<Level> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/toy");
    let manifest = TileManifest::builtin();
    let mut paths: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths.iter().map(|p| Level::parse(&std::fs::read_to_string(p).unwrap(), &manifest).unwrap()).collect()
}

pub fn markov_model() -> &'static MarkovModel {
    static MODEL: OnceLock<MarkovModel> = OnceLock::new();
    MODEL.get_or_init(|| markov_train(&toy_corpus()).unwrap())
}

/// Full-size network whose dense matrix every CNN test shares.
pub fn base() -> &'static Network<f32> {
    static BASE: OnceLock<Network<f32>> = OnceLock::new();
    BASE.get_or_init(|| Network::new(Architecture::agent(), 7))
}

pub fn cnn_agent(seed: u64, tau: f64, cap: usize) -> CnnAgent<f32> {
    CnnAgent::from_network(base().with_conv_seed(seed, 0.02), None, CnnConfig { tau, cap }).unwrap()
}

pub fn markov_config(seed: u64) -> SessionConfig {
    SessionConfig { agent: AgentKind::Markov, cap: 6, seed, explanations: false, ..SessionConfig::default() }
}

pub fn markov_session(seed: u64) -> Session {
    let partner = Partner::markov(markov_model().clone(), 6, seed).unwrap();
    Session::create(format!("m{seed}"), markov_config(seed), partner, Box::<LogicalClock>::default(), manifest())
        .unwrap()
}

pub fn cnn_session(seed: u64, tau: f64, explanations: bool) -> Session {
    let config = SessionConfig { tau, cap: 4, seed, explanations, ..SessionConfig::default() };
    let partner = Partner::cnn(cnn_agent(seed, tau, 4));
    Session::create(format!("c{seed}"), config, partner, Box::<LogicalClock>::default(), manifest()).unwrap()
}

pub fn manifest() -> Arc<TileManifest> {
    Arc::new(TileManifest::builtin())
}
