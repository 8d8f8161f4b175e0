//! The shared tile-grid level, its edit semantics, 40-column windows and the
//! one-hot tensor encoding consumed by the agents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::Volume;
use crate::scalar::Scalar;
use crate::tiles::{TileId, TileManifest, EMPTY_GLYPH, TILE_COUNT};

/// Rows in every level.
pub const LEVEL_HEIGHT: usize = 15;
/// Columns seen by an agent at once.
pub const WINDOW_WIDTH: usize = 40;
pub const DEFAULT_LEVEL_WIDTH: usize = 200;
/// Minimum width of a level that can host an editing session.
pub const MIN_SESSION_WIDTH: usize = WINDOW_WIDTH;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LevelError {
    #[error("cell ({x},{y}) is outside a {width}x{LEVEL_HEIGHT} level")]
    OutOfBounds { x: usize, y: usize, width: usize },
    #[error("cell ({x},{y}) is already occupied")]
    CellOccupied { x: usize, y: usize },
    #[error("cell ({x},{y}) does not hold tile {tile}")]
    CellMismatch { x: usize, y: usize, tile: TileId },
    #[error("AI-authored edits may only add tiles")]
    AiDeletion,
    #[error("level is {width} columns wide, at least {WINDOW_WIDTH} required")]
    LevelTooNarrow { width: usize },
    #[error("level width must be at least 1")]
    ZeroWidth,
    #[error("level text must have {LEVEL_HEIGHT} rows of equal length (got {rows} rows)")]
    BadDimensions { rows: usize },
    #[error("unknown glyph {glyph:?} at row {row}, column {col}")]
    UnknownGlyph { glyph: char, row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Addition,
    Deletion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    Human,
    Ai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    pub author: Author,
    pub turn_id: u64,
    /// Milliseconds since session start.
    pub timestamp: u64,
}

impl Edit {
    pub fn add(x: usize, y: usize, tile: TileId, author: Author) -> Self {
        Self { kind: EditKind::Addition, x, y, tile, author, turn_id: 0, timestamp: 0 }
    }

    pub fn delete(x: usize, y: usize, tile: TileId, author: Author) -> Self {
        Self { kind: EditKind::Deletion, x, y, tile, author, turn_id: 0, timestamp: 0 }
    }
}

/// A `width x 15` grid where each cell is empty or holds one tile.
///
/// Row 0 is the top of the level and row 14 the bottom. Cells are stored
/// column-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Level {
    width: usize,
    cells: Vec<Option<TileId>>,
}

impl Level {
    pub fn new(width: usize) -> Result<Self, LevelError> {
        if width == 0 {
            return Err(LevelError::ZeroWidth);
        }
        Ok(Self { width, cells: vec![None; width * LEVEL_HEIGHT] })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        LEVEL_HEIGHT
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < LEVEL_HEIGHT
    }

    pub fn get(&self, x: usize, y: usize) -> Option<TileId> {
        if self.in_bounds(x, y) {
            self.cells[x * LEVEL_HEIGHT + y]
        } else {
            None
        }
    }

    fn check_bounds(&self, x: usize, y: usize) -> Result<usize, LevelError> {
        if self.in_bounds(x, y) {
            Ok(x * LEVEL_HEIGHT + y)
        } else {
            Err(LevelError::OutOfBounds { x, y, width: self.width })
        }
    }

    /// Checks an edit against the current grid without applying it.
    pub fn validate(&self, edit: &Edit) -> Result<(), LevelError> {
        let idx = self.check_bounds(edit.x, edit.y)?;
        match edit.kind {
            EditKind::Addition if self.cells[idx].is_some() => Err(LevelError::CellOccupied { x: edit.x, y: edit.y }),
            EditKind::Deletion if edit.author == Author::Ai => Err(LevelError::AiDeletion),
            EditKind::Deletion if self.cells[idx] != Some(edit.tile) => {
                Err(LevelError::CellMismatch { x: edit.x, y: edit.y, tile: edit.tile })
            }
            _ => Ok(()),
        }
    }

    pub fn apply_edit(&mut self, edit: &Edit) -> Result<(), LevelError> {
        self.validate(edit)?;
        let idx = edit.x * LEVEL_HEIGHT + edit.y;
        self.cells[idx] = match edit.kind {
            EditKind::Addition => Some(edit.tile),
            EditKind::Deletion => None,
        };
        Ok(())
    }

    /// Functional form of [`Level::apply_edit`].
    pub fn with_edit(&self, edit: &Edit) -> Result<Level, LevelError> {
        let mut next = self.clone();
        next.apply_edit(edit)?;
        Ok(next)
    }

    /// Sets a cell directly, bypassing edit preconditions. Used by loaders.
    pub fn set(&mut self, x: usize, y: usize, tile: Option<TileId>) -> Result<(), LevelError> {
        let idx = self.check_bounds(x, y)?;
        self.cells[idx] = tile;
        Ok(())
    }

    /// Occupied cells as `(x, y, tile)`, column-major.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, TileId)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, c)| c.map(|t| (i / LEVEL_HEIGHT, i % LEVEL_HEIGHT, t)))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Origin of the 40-column window centred as close as possible on
    /// `focus_x`.
    pub fn window_origin(&self, focus_x: usize) -> Result<usize, LevelError> {
        if self.width < WINDOW_WIDTH {
            return Err(LevelError::LevelTooNarrow { width: self.width });
        }
        Ok(focus_x.saturating_sub(WINDOW_WIDTH / 2).min(self.width - WINDOW_WIDTH))
    }

    pub fn extract_window(&self, focus_x: usize) -> Result<Window, LevelError> {
        let origin_x = self.window_origin(focus_x)?;
        self.window_at(origin_x)
    }

    pub fn window_at(&self, origin_x: usize) -> Result<Window, LevelError> {
        if self.width < WINDOW_WIDTH {
            return Err(LevelError::LevelTooNarrow { width: self.width });
        }
        if origin_x > self.width - WINDOW_WIDTH {
            return Err(LevelError::OutOfBounds { x: origin_x, y: 0, width: self.width });
        }
        let start = origin_x * LEVEL_HEIGHT;
        let cells = self.cells[start..start + WINDOW_WIDTH * LEVEL_HEIGHT].to_vec();
        Ok(Window { origin_x, cells })
    }

    /// Parses the level text format: 15 lines of equal width, `-` for empty.
    pub fn parse(text: &str, manifest: &TileManifest) -> Result<Level, LevelError> {
        let rows: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        if rows.len() != LEVEL_HEIGHT {
            return Err(LevelError::BadDimensions { rows: rows.len() });
        }
        let width = rows[0].chars().count();
        if width == 0 || rows.iter().any(|r| r.chars().count() != width) {
            return Err(LevelError::BadDimensions { rows: rows.len() });
        }
        let mut level = Level::new(width)?;
        for (y, row) in rows.iter().enumerate() {
            for (x, glyph) in row.chars().enumerate() {
                if glyph == EMPTY_GLYPH {
                    continue;
                }
                let tile = manifest.by_glyph(glyph).ok_or(LevelError::UnknownGlyph { glyph, row: y, col: x })?;
                level.cells[x * LEVEL_HEIGHT + y] = Some(tile);
            }
        }
        Ok(level)
    }

    /// Renders the level text format; every row ends with `\n`.
    pub fn to_text(&self, manifest: &TileManifest) -> String {
        let mut out = String::with_capacity((self.width + 1) * LEVEL_HEIGHT);
        for y in 0..LEVEL_HEIGHT {
            for x in 0..self.width {
                out.push(self.get(x, y).map_or(EMPTY_GLYPH, |t| manifest.glyph(t)));
            }
            out.push('\n');
        }
        out
    }
}

/// A 40x15 view of a level starting at column `origin_x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub origin_x: usize,
    cells: Vec<Option<TileId>>,
}

impl Window {
    /// An all-empty window, mostly useful in tests.
    pub fn empty(origin_x: usize) -> Self {
        Self { origin_x, cells: vec![None; WINDOW_WIDTH * LEVEL_HEIGHT] }
    }

    /// Window-relative lookup.
    pub fn get(&self, x: usize, y: usize) -> Option<TileId> {
        if x < WINDOW_WIDTH && y < LEVEL_HEIGHT {
            self.cells[x * LEVEL_HEIGHT + y]
        } else {
            None
        }
    }

    /// Window-relative write. Panics outside the window.
    pub fn set(&mut self, x: usize, y: usize, tile: Option<TileId>) {
        assert!(x < WINDOW_WIDTH && y < LEVEL_HEIGHT, "({x},{y}) outside window");
        self.cells[x * LEVEL_HEIGHT + y] = tile;
    }

    pub fn contains_column(&self, abs_x: usize) -> bool {
        abs_x >= self.origin_x && abs_x < self.origin_x + WINDOW_WIDTH
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, TileId)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, c)| c.map(|t| (i / LEVEL_HEIGHT, i % LEVEL_HEIGHT, t)))
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// One-hot encoding: `out[x][y][t] = 1` iff cell `(x, y)` holds tile `t`.
    pub fn to_tensor<T: Scalar>(&self) -> Volume<T> {
        let mut v = Volume::zeros(WINDOW_WIDTH, LEVEL_HEIGHT, TILE_COUNT);
        for (x, y, t) in self.occupied() {
            v.set(x, y, t.index(), T::one());
        }
        v
    }
}

/// Flat index into a 40x15x32 action matrix.
pub fn action_index(x: usize, y: usize, tile: TileId) -> usize {
    (x * LEVEL_HEIGHT + y) * TILE_COUNT + tile.index()
}

/// Inverse of [`action_index`].
pub fn action_coords(index: usize) -> (usize, usize, TileId) {
    let tile = TileId::new((index % TILE_COUNT) as u8).expect("index within channel count");
    let cell = index / TILE_COUNT;
    (cell / LEVEL_HEIGHT, cell % LEVEL_HEIGHT, tile)
}
