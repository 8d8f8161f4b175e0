use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::level::{Level, Window, LEVEL_HEIGHT, WINDOW_WIDTH};
use crate::tiles::{TileId, TILE_COUNT};

use super::{Addition, AgentError, AgentProposal, Blacklist};

/// Empty plus one outcome per tile.
pub const OUTCOMES: usize = TILE_COUNT + 1;
pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// Content of one neighbourhood slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Boundary,
    Empty,
    Tile(TileId),
}

impl Slot {
    fn of(cell: Option<TileId>) -> Self {
        cell.map_or(Slot::Empty, Slot::Tile)
    }
}

/// The cells left of, below, and below-left of the cell being generated.
/// Row 14 is the bottom, so "below" is `y + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    pub left: Slot,
    pub below: Slot,
    pub below_left: Slot,
}

impl Context {
    /// Context of `(x, y)` in a `width`-column grid read through `get`.
    pub fn at(width: usize, x: usize, y: usize, get: impl Fn(usize, usize) -> Option<TileId>) -> Self {
        let slot = |cx: Option<usize>, cy: usize| match cx {
            Some(cx) if cx < width && cy < LEVEL_HEIGHT => Slot::of(get(cx, cy)),
            _ => Slot::Boundary,
        };
        let left_x = x.checked_sub(1);
        Context { left: slot(left_x, y), below: slot(Some(x), y + 1), below_left: slot(left_x, y + 1) }
    }
}

fn outcome_index(cell: Option<TileId>) -> usize {
    cell.map_or(0, |t| t.index() + 1)
}

fn outcome_tile(index: usize) -> Option<TileId> {
    index.checked_sub(1).map(|i| TileId::new(i as u8).expect("outcome within tile range"))
}

/// Generation order shared by training and sampling: columns left to
/// right, each column from the bottom row up.
fn scan_order(width: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..width).flat_map(|x| (0..LEVEL_HEIGHT).rev().map(move |y| (x, y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub smoothing: f64,
    #[serde(with = "count_table")]
    counts: BTreeMap<Context, Vec<u64>>,
}

mod count_table {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        context: Context,
        counts: Vec<u64>,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<Context, Vec<u64>>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Row> = map.iter().map(|(c, n)| Row { context: *c, counts: n.clone() }).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Context, Vec<u64>>, D::Error> {
        let rows = Vec::<Row>::deserialize(d)?;
        let mut map = BTreeMap::new();
        for row in rows {
            if row.counts.len() != OUTCOMES {
                return Err(serde::de::Error::custom(format!("expected {OUTCOMES} counts, got {}", row.counts.len())));
            }
            map.insert(row.context, row.counts);
        }
        Ok(map)
    }
}

impl MarkovModel {
    pub fn empty(smoothing: f64) -> Self {
        Self { smoothing, counts: BTreeMap::new() }
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.counts.keys()
    }

    pub fn count(&self, context: &Context, outcome: Option<TileId>) -> u64 {
        self.counts.get(context).map_or(0, |c| c[outcome_index(outcome)])
    }

    fn observe(&mut self, context: Context, outcome: Option<TileId>) {
        self.counts.entry(context).or_insert_with(|| vec![0; OUTCOMES])[outcome_index(outcome)] += 1;
    }

    /// Smoothed conditional distribution over `[empty, tile 0, .., tile 31]`.
    /// An unseen context puts all mass on empty.
    pub fn distribution(&self, context: &Context) -> [f64; OUTCOMES] {
        let mut p = [0.0; OUTCOMES];
        match self.counts.get(context) {
            None => p[0] = 1.0,
            Some(counts) => {
                let total: u64 = counts.iter().sum();
                let denom = total as f64 + self.smoothing * OUTCOMES as f64;
                if denom <= 0.0 {
                    p[0] = 1.0;
                } else {
                    for (pi, &c) in p.iter_mut().zip(counts) {
                        *pi = (c as f64 + self.smoothing) / denom;
                    }
                }
            }
        }
        p
    }

    pub fn probability(&self, context: &Context, outcome: Option<TileId>) -> f64 {
        self.distribution(context)[outcome_index(outcome)]
    }

    /// Inverse-CDF draw from [`MarkovModel::distribution`].
    pub fn sample<R: Rng>(&self, context: &Context, rng: &mut R) -> Option<TileId> {
        let p = self.distribution(context);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                return outcome_tile(i);
            }
        }
        // Rounding left u above the final partial sum.
        outcome_tile(p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Tabulates outcome counts per context over every cell of every level.
pub fn markov_train(corpus: &[Level]) -> Result<MarkovModel, AgentError> {
    if corpus.is_empty() {
        return Err(AgentError::EmptyCorpus);
    }
    let mut model = MarkovModel::empty(DEFAULT_SMOOTHING);
    for level in corpus {
        for (x, y) in scan_order(level.width()) {
            let ctx = Context::at(level.width(), x, y, |cx, cy| level.get(cx, cy));
            model.observe(ctx, level.get(x, y));
        }
    }
    Ok(model)
}

/// Samples the window's empty cells in scan order and returns up to `n`
/// tile outcomes as additions. Sampled tiles become context for later
/// cells; blacklisted outcomes are discarded. The window's edges act as
/// the boundary.
pub fn markov_propose(
    model: &MarkovModel,
    window: &Window,
    n: usize,
    seed: u64,
    blacklist: &Blacklist,
    turn_id: u64,
) -> AgentProposal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = window.clone();
    let mut additions = Vec::new();
    for (x, y) in scan_order(WINDOW_WIDTH) {
        if additions.len() >= n {
            break;
        }
        if grid.get(x, y).is_some() {
            continue;
        }
        let ctx = Context::at(WINDOW_WIDTH, x, y, |cx, cy| grid.get(cx, cy));
        let Some(tile) = model.sample(&ctx, &mut rng) else { continue };
        let addition = Addition { x: window.origin_x + x, y, tile, activation: model.probability(&ctx, Some(tile)) };
        if blacklist.contains(&addition.placement()) {
            continue;
        }
        grid.set(x, y, Some(tile));
        additions.push(addition);
    }
    AgentProposal { turn_id, additions, action_matrix: None }
}
