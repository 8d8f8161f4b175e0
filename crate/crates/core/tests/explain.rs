use std::sync::OnceLock;

use morai_core::agent::{CnnAgent, CnnConfig};
use morai_core::explain::{explain, explain_naive};
use morai_core::net::{Architecture, Network};
use morai_core::{TileId, TileManifest, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base() -> &'static Network<f32> {
    static BASE: OnceLock<Network<f32>> = OnceLock::new();
    BASE.get_or_init(|| Network::new(Architecture::agent(), 3))
}

fn t(id: u8) -> TileId {
    TileId::new(id).unwrap()
}

#[test]
fn all_zero_window_has_no_decisive_region() {
    let net = base().with_conv_seed(1, 0.02);
    let e = explain(&net, &Window::empty(0), 5, 14, t(0), &TileManifest::builtin()).unwrap();
    assert_eq!((e.x0, e.y0, e.delta), (0, 0, 0.0));
    assert!(e.max_filter < 8);
}

#[test]
fn single_tile_is_the_only_candidate() {
    let net = base().with_conv_seed(2, 0.02);
    let mut w = Window::empty(30);
    w.set(10, 10, Some(t(9)));
    let e = explain(&net, &w, 12, 11, t(1), &TileManifest::builtin()).unwrap();
    assert!(e.delta > 0.0);
    assert!((7..=10).contains(&e.x0) && (7..=10).contains(&e.y0), "slice ({}, {})", e.x0, e.y0);
    assert_eq!(e.x, 42);
    assert!(e.text.contains(&format!("columns {}-{}", 30 + e.x0, 33 + e.x0)));
}

#[test]
fn matches_the_naive_loop_bitwise() {
    let manifest = TileManifest::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..4 {
        let net = base().with_conv_seed(100 + seed, 0.02);
        let mut w = Window::empty(rng.gen_range(0..100));
        for x in 0..40 {
            for y in 0..15 {
                if rng.gen_bool(0.25) {
                    w.set(x, y, Some(t(rng.gen_range(0..32))));
                }
            }
        }
        let (x, y, tile) = (rng.gen_range(0..40), rng.gen_range(0..15), t(rng.gen_range(0..32)));
        let fast = explain(&net, &w, x, y, tile, &manifest).unwrap();
        let slow = explain_naive(&net, &w, x, y, tile, &manifest).unwrap();
        assert_eq!(fast, slow);
        assert_eq!(fast.delta.to_bits(), slow.delta.to_bits());
    }
}

#[test]
fn confidence_matches_the_proposal_and_nothing_is_trained() {
    let mut agent =
        CnnAgent::from_network(base().with_conv_seed(5, 0.02), None, CnnConfig { tau: 0.01, cap: 3 }).unwrap();
    let mut w = Window::empty(0);
    for x in 0..40 {
        w.set(x, 14, Some(t(0)));
    }
    let proposal = agent.propose(&w, 1).unwrap();
    let before = agent.network().clone();
    for a in &proposal.additions {
        let e = explain(agent.network(), &w, a.x, a.y, a.tile, &TileManifest::builtin()).unwrap();
        assert_eq!(e.confidence, a.activation);
    }
    assert!(agent.network() == &before);
}

#[test]
fn rejects_coordinates_outside_the_window() {
    let net = base().with_conv_seed(6, 0.0);
    assert!(explain(&net, &Window::empty(0), 40, 0, t(0), &TileManifest::builtin()).is_err());
}
