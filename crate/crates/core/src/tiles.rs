//! Tile taxonomy loaded from a versioned manifest.
//!
//! The manifest is a tab-separated text file with one line per tile:
//! `id<TAB>glyph<TAB>name<TAB>category`. Blank lines and lines starting with
//! `#` are ignored. The first comment line may carry a version tag of the
//! form `# tiles.manifest v<N>`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of tile types, and therefore of tensor channels.
pub const TILE_COUNT: usize = 32;

/// Glyph reserved for an empty cell in the level text format.
pub const EMPTY_GLYPH: char = '-';

const BUILTIN_MANIFEST: &str = include_str!("../assets/tiles.manifest");

/// Identifier of a tile type, always in `0..32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TileId(u8);

impl TileId {
    pub fn new(id: u8) -> Option<Self> {
        ((id as usize) < TILE_COUNT).then_some(Self(id))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = TileId> {
        (0..TILE_COUNT as u8).map(TileId)
    }
}

impl TryFrom<u8> for TileId {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        TileId::new(v).ok_or_else(|| format!("tile id {v} out of range 0..{TILE_COUNT}"))
    }
}

impl From<TileId> for u8 {
    fn from(t: TileId) -> u8 {
        t.0
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileCategory {
    Solid,
    Block,
    Enemy,
    Pipe,
    Collectible,
    Decoration,
    Hazard,
    Structure,
}

impl FromStr for TileCategory {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "solid" => Self::Solid,
            "block" => Self::Block,
            "enemy" => Self::Enemy,
            "pipe" => Self::Pipe,
            "collectible" => Self::Collectible,
            "decoration" => Self::Decoration,
            "hazard" => Self::Hazard,
            "structure" => Self::Structure,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileType {
    pub id: TileId,
    pub glyph: char,
    pub name: String,
    pub category: TileCategory,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManifestError {
    #[error("line {line}: expected 4 tab-separated fields")]
    BadLine { line: usize },
    #[error("line {line}: bad tile id {value:?}")]
    BadId { line: usize, value: String },
    #[error("line {line}: glyph must be a single character other than '-'")]
    BadGlyph { line: usize },
    #[error("line {line}: unknown category {value:?}")]
    BadCategory { line: usize, value: String },
    #[error("duplicate {what} {value:?}")]
    Duplicate { what: &'static str, value: String },
    #[error("manifest lists {0} tiles, expected {TILE_COUNT}")]
    WrongCount(usize),
    #[error("reading manifest: {0}")]
    Io(String),
}

/// Bijective mapping between tile ids, glyphs and names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileManifest {
    version: u32,
    tiles: Vec<TileType>,
    by_glyph: HashMap<char, TileId>,
    by_name: HashMap<String, TileId>,
}

impl TileManifest {
    /// The manifest shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MANIFEST).expect("builtin manifest is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut version = 1;
        let mut slots: Vec<Option<TileType>> = vec![None; TILE_COUNT];
        let mut by_glyph = HashMap::new();
        let mut by_name = HashMap::new();
        let mut count = 0;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("tiles.manifest v") {
                    version = v.trim().parse().unwrap_or(version);
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(ManifestError::BadLine { line: line_no });
            }
            let id = fields[0]
                .trim()
                .parse::<u8>()
                .ok()
                .and_then(TileId::new)
                .ok_or_else(|| ManifestError::BadId { line: line_no, value: fields[0].to_string() })?;
            let mut glyphs = fields[1].chars();
            let glyph = match (glyphs.next(), glyphs.next()) {
                (Some(g), None) if g != EMPTY_GLYPH && !g.is_whitespace() => g,
                _ => return Err(ManifestError::BadGlyph { line: line_no }),
            };
            let name = fields[2].trim().to_string();
            let category = fields[3]
                .trim()
                .parse()
                .map_err(|_| ManifestError::BadCategory { line: line_no, value: fields[3].to_string() })?;

            if slots[id.index()].is_some() {
                return Err(ManifestError::Duplicate { what: "id", value: id.to_string() });
            }
            if by_glyph.insert(glyph, id).is_some() {
                return Err(ManifestError::Duplicate { what: "glyph", value: glyph.to_string() });
            }
            if by_name.insert(name.clone(), id).is_some() {
                return Err(ManifestError::Duplicate { what: "name", value: name });
            }
            slots[id.index()] = Some(TileType { id, glyph, name, category });
            count += 1;
        }

        if count != TILE_COUNT {
            return Err(ManifestError::WrongCount(count));
        }
        let tiles = slots.into_iter().map(|t| t.expect("all ids present")).collect();
        Ok(Self { version, tiles, by_glyph, by_name })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn tiles(&self) -> &[TileType] {
        &self.tiles
    }

    pub fn get(&self, id: TileId) -> &TileType {
        &self.tiles[id.index()]
    }

    pub fn name(&self, id: TileId) -> &str {
        &self.tiles[id.index()].name
    }

    pub fn glyph(&self, id: TileId) -> char {
        self.tiles[id.index()].glyph
    }

    pub fn by_glyph(&self, glyph: char) -> Option<TileId> {
        self.by_glyph.get(&glyph).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<TileId> {
        self.by_name.get(name).copied()
    }

    /// Serializes back to the manifest text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("# tiles.manifest v{}\n# id\tglyph\tname\tcategory\n", self.version);
        for t in &self.tiles {
            let cat = serde_json::to_value(t.category).expect("category serializes");
            out.push_str(&format!("{}\t{}\t{}\t{}\n", t.id, t.glyph, t.name, cat.as_str().unwrap_or("")));
        }
        out
    }
}

impl Default for TileManifest {
    fn default() -> Self {
        Self::builtin()
    }
}
