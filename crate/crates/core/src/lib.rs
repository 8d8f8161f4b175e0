//! Core engine of a co-creative level editor: the shared tile grid, an
//! adaptive CNN partner and a Markov-chain baseline, per-addition
//! explanations, and the rank statistics used to compare partners.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The deployed
//! agent runs in `f32`; gradient checks and statistics use `f64`.

pub mod agent;
pub mod explain;
pub mod level;
pub mod net;
pub mod scalar;
pub mod stats;
pub mod tiles;

pub use level::{Author, Edit, EditKind, Level, LevelError, Window, LEVEL_HEIGHT, WINDOW_WIDTH};
pub use scalar::Scalar;
pub use tiles::{TileId, TileManifest, TILE_COUNT};

/// Network with double-precision parameters, used for gradient checks.
pub type Network64 = net::Network<f64>;
/// Network with single-precision parameters, as used by the deployed agent.
pub type Network32 = net::Network<f32>;
/// The deployed CNN partner.
pub type CnnAgent32 = agent::CnnAgent<f32>;
