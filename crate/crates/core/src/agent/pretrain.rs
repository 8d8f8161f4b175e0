use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::level::{action_index, Level, LEVEL_HEIGHT, WINDOW_WIDTH};
use crate::scalar::Scalar;
use crate::tiles::{TileId, TILE_COUNT};

use super::{AgentError, CnnAgent};

/// Masked-completion pretraining on a level corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    /// Range of the fraction of occupied cells hidden from the input.
    pub hide_min: f64,
    pub hide_max: f64,
    /// Column spacing between candidate window origins.
    pub window_stride: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self { epochs: 4, steps_per_epoch: 50, hide_min: 0.1, hide_max: 0.5, window_stride: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    /// Mean masked loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

/// Trains the agent to restore hidden tiles: each step hides part of a
/// window's occupied cells, asks for 1 at the hidden `(x, y, tile)` entries
/// and 0 at as many random empty cells, and takes one Adam step.
pub fn pretrain<T: Scalar>(
    agent: &mut CnnAgent<T>,
    corpus: &[Level],
    config: &PretrainConfig,
) -> Result<PretrainReport, AgentError> {
    if corpus.is_empty() {
        return Err(AgentError::EmptyCorpus);
    }
    if let Some(level) = corpus.iter().find(|l| l.width() < WINDOW_WIDTH) {
        return Err(AgentError::LevelTooNarrow { width: level.width() });
    }
    let ok_range = 0.0 <= config.hide_min && config.hide_min <= config.hide_max && config.hide_max <= 1.0;
    if !ok_range || config.window_stride == 0 {
        return Err(AgentError::BadConfig(format!("bad pretraining configuration {config:?}")));
    }

    let mut origins = Vec::new();
    for (li, level) in corpus.iter().enumerate() {
        let last = level.width() - WINDOW_WIDTH;
        origins.extend((0..=last).step_by(config.window_stride).map(|o| (li, o)));
        if last % config.window_stride != 0 {
            origins.push((li, last));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut steps = 0;
    for _ in 0..config.epochs {
        origins.shuffle(&mut rng);
        let mut total = 0.0;
        for s in 0..config.steps_per_epoch {
            let (li, origin) = origins[s % origins.len()];
            let window = corpus[li].window_at(origin)?;
            let mut occupied: Vec<_> = window.occupied().collect();
            let mut empty: Vec<(usize, usize)> = (0..WINDOW_WIDTH)
                .flat_map(|x| (0..LEVEL_HEIGHT).map(move |y| (x, y)))
                .filter(|&(x, y)| window.get(x, y).is_none())
                .collect();

            let ratio = if config.hide_max > config.hide_min {
                rng.gen_range(config.hide_min..=config.hide_max)
            } else {
                config.hide_min
            };
            let hide = ((ratio * occupied.len() as f64).round() as usize).min(occupied.len());
            let (hidden, _) = occupied.partial_shuffle(&mut rng, hide);
            let negatives = hide.min(empty.len());
            let (neg_cells, _) = empty.partial_shuffle(&mut rng, negatives);

            let mut input_window = window.clone();
            let mut targets = Vec::with_capacity(hidden.len() + neg_cells.len());
            for &(x, y, tile) in hidden.iter() {
                input_window.set(x, y, None);
                targets.push((action_index(x, y, tile), T::one()));
            }
            for &(x, y) in neg_cells.iter() {
                let tile = TileId::new(rng.gen_range(0..TILE_COUNT as u8)).expect("tile in range");
                targets.push((action_index(x, y, tile), T::zero()));
            }

            let (net, adam) = agent.parts_mut();
            let (loss, grads) = net.backward_sparse(&input_window.to_tensor(), &targets)?;
            adam.step(net, &grads)?;
            total += loss.to_f64().unwrap_or(f64::NAN);
            steps += 1;
        }
        epoch_losses.push(total / config.steps_per_epoch.max(1) as f64);
    }
    Ok(PretrainReport { epoch_losses, steps })
}
