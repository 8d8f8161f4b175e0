//! Declarative stand-ins for human designers: a keep/delete rule for AI
//! additions and a policy for the persona's own edits.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use morai_core::{Level, TileId, TileManifest, LEVEL_HEIGHT};
use morai_session::EditRequest;

use crate::SimError;

/// The on-disk persona format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonaSpec {
    pub name: String,
    /// Tile names the persona keeps; absent means every tile.
    #[serde(default)]
    pub allow_tiles: Option<Vec<String>>,
    /// Inclusive row band in which AI additions may stay.
    #[serde(default = "full_band")]
    pub rows: [usize; 2],
    /// Inclusive column ranges the persona keeps empty of AI tiles, and
    /// never fills itself.
    #[serde(default)]
    pub protected_columns: Vec<[usize; 2]>,
    pub placement: PlacementPolicy,
    #[serde(default)]
    pub seed: u64,
}

fn full_band() -> [usize; 2] {
    [0, LEVEL_HEIGHT - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacementPolicy {
    /// Fixed per-turn batches; turns past the end place nothing.
    Script { turns: Vec<Vec<EditRequest>> },
    /// Extends a two-row ground strip rightwards, skipping protected
    /// columns. The strip starts up to `start_jitter` columns after
    /// `start` and grows by `columns_per_turn` plus up to `extra_columns`
    /// columns per turn, drawn from the run seed.
    FlatGround {
        start: usize,
        columns_per_turn: usize,
        #[serde(default)]
        start_jitter: usize,
        #[serde(default)]
        extra_columns: usize,
    },
    /// Random allowed tiles in the row band near the persona's cursor.
    Random { per_turn: usize },
    /// Never edits.
    Idle,
}

#[derive(Debug, Clone)]
pub struct Persona {
    pub spec: PersonaSpec,
    allowed: Option<HashSet<TileId>>,
    ground: TileId,
}

impl Persona {
    pub fn new(spec: PersonaSpec, manifest: &TileManifest) -> Result<Self, SimError> {
        let allowed = match &spec.allow_tiles {
            None => None,
            Some(names) => Some(
                names
                    .iter()
                    .map(|n| manifest.by_name(n).ok_or_else(|| SimError::BadPersona(format!("unknown tile {n:?}"))))
                    .collect::<Result<HashSet<_>, _>>()?,
            ),
        };
        let [lo, hi] = spec.rows;
        if lo > hi || hi >= LEVEL_HEIGHT {
            return Err(SimError::BadPersona(format!("row band {lo}..={hi} is not inside 0..{LEVEL_HEIGHT}")));
        }
        if spec.protected_columns.iter().any(|[a, b]| a > b) {
            return Err(SimError::BadPersona("protected column range with start after end".into()));
        }
        if let PlacementPolicy::FlatGround { columns_per_turn: 0, .. } = spec.placement {
            return Err(SimError::BadPersona("columns_per_turn must be at least 1".into()));
        }
        let ground =
            manifest.by_name("ground").ok_or_else(|| SimError::BadPersona("manifest has no ground tile".into()))?;
        Ok(Self { spec, allowed, ground })
    }

    pub fn load(path: &Path, manifest: &TileManifest) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        let spec: PersonaSpec =
            serde_json::from_str(&text).map_err(|e| SimError::BadPersona(format!("{}: {e}", path.display())))?;
        Self::new(spec, manifest)
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn is_protected(&self, x: usize) -> bool {
        self.spec.protected_columns.iter().any(|&[a, b]| (a..=b).contains(&x))
    }

    fn tile_allowed(&self, tile: TileId) -> bool {
        self.allowed.as_ref().is_none_or(|s| s.contains(&tile))
    }

    /// Whether the persona keeps an AI addition at `(x, y)`. The grid is
    /// part of the signature so richer rules stay pure functions of it.
    pub fn keeps(&self, x: usize, y: usize, tile: TileId, _grid: &Level) -> bool {
        self.tile_allowed(tile) && (self.spec.rows[0]..=self.spec.rows[1]).contains(&y) && !self.is_protected(x)
    }
}

/// Per-run state of a persona's placement policy.
#[derive(Debug, Clone)]
pub struct PersonaRun<'a> {
    persona: &'a Persona,
    rng: ChaCha8Rng,
    cursor: usize,
    turn: usize,
    focus_x: usize,
}

impl<'a> PersonaRun<'a> {
    pub fn new(persona: &'a Persona, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(persona.spec.seed ^ seed.wrapping_mul(0x2545_F491_4F6C_DD1D));
        let cursor = match persona.spec.placement {
            PlacementPolicy::FlatGround { start, start_jitter, .. } => start + rng.gen_range(0..=start_jitter),
            _ => 0,
        };
        Self { persona, rng, cursor, turn: 0, focus_x: cursor }
    }

    /// Column of the persona's most recent edit, where it wants the AI to
    /// look.
    pub fn focus_x(&self) -> usize {
        self.focus_x
    }

    /// This turn's edits; all of them are legal on `grid`.
    pub fn edits(&mut self, grid: &Level) -> Vec<EditRequest> {
        let turn = self.turn;
        self.turn += 1;
        let edits = match &self.persona.spec.placement {
            PlacementPolicy::Script { turns } => legal_prefix(grid, turns.get(turn).cloned().unwrap_or_default()),
            PlacementPolicy::FlatGround { columns_per_turn, extra_columns, .. } => {
                let columns = columns_per_turn + self.rng.gen_range(0..=*extra_columns);
                self.flat_ground(grid, columns)
            }
            PlacementPolicy::Random { per_turn } => self.random(grid, *per_turn),
            PlacementPolicy::Idle => Vec::new(),
        };
        if let Some(last) = edits.last() {
            self.focus_x = last.x;
        }
        edits
    }

    fn flat_ground(&mut self, grid: &Level, columns: usize) -> Vec<EditRequest> {
        let mut edits = Vec::new();
        let mut placed = 0;
        while placed < columns && self.cursor < grid.width() {
            let x = self.cursor;
            self.cursor += 1;
            if self.persona.is_protected(x) {
                continue;
            }
            for y in [LEVEL_HEIGHT - 2, LEVEL_HEIGHT - 1] {
                if grid.get(x, y).is_none() {
                    edits.push(EditRequest::add(x, y, self.persona.ground));
                }
            }
            placed += 1;
        }
        edits
    }

    fn random(&mut self, grid: &Level, per_turn: usize) -> Vec<EditRequest> {
        let tiles: Vec<TileId> = TileId::all().filter(|&t| self.persona.tile_allowed(t)).collect();
        let tiles = if tiles.is_empty() { vec![self.persona.ground] } else { tiles };
        let [lo, hi] = self.persona.spec.rows;
        let span = 20.min(grid.width());
        let x0 = self.cursor.min(grid.width() - span);
        let mut free: Vec<(usize, usize)> = (x0..x0 + span)
            .filter(|&x| !self.persona.is_protected(x))
            .flat_map(|x| (lo..=hi).map(move |y| (x, y)))
            .filter(|&(x, y)| grid.get(x, y).is_none())
            .collect();
        free.shuffle(&mut self.rng);
        let edits = free
            .into_iter()
            .take(per_turn)
            .map(|(x, y)| EditRequest::add(x, y, *tiles.choose(&mut self.rng).expect("non-empty")))
            .collect();
        self.cursor = (self.cursor + self.rng.gen_range(1..=5)) % grid.width();
        edits
    }
}

/// The longest prefix of a scripted batch that applies cleanly.
fn legal_prefix(grid: &Level, batch: Vec<EditRequest>) -> Vec<EditRequest> {
    let mut scratch = grid.clone();
    let mut out = Vec::new();
    for e in batch {
        let edit = morai_core::Edit {
            kind: e.kind,
            x: e.x,
            y: e.y,
            tile: e.tile,
            author: morai_core::Author::Human,
            turn_id: 0,
            timestamp: 0,
        };
        if scratch.apply_edit(&edit).is_err() {
            break;
        }
        out.push(e);
    }
    out
}
