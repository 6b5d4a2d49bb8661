//! Label maps: per-pixel small-integer class ids.

use crate::error::{Error, Result};

/// Class id marking foreground / ignore pixels in label maps on disk and in
/// memory. Background class ids must stay below this.
pub const FOREGROUND_ID: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    ids: Vec<u8>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, ids: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidShape { context: "LabelMap::new", shape: vec![height, width] });
        }
        if ids.len() != height * width {
            return Err(Error::DataLength { expected: height * width, got: ids.len() });
        }
        Ok(LabelMap { height, width, ids })
    }

    pub fn filled(height: usize, width: usize, id: u8) -> Self {
        LabelMap { height, width, ids: vec![id; height * width] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut ids = Vec::with_capacity(height * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::Format("ragged label rows".into()));
            }
            ids.extend_from_slice(r);
        }
        LabelMap::new(height, width, ids)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.ids[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, id: u8) {
        self.ids[y * self.width + x] = id;
    }

    /// Highest non-foreground id present, if any.
    pub fn max_class_id(&self) -> Option<u8> {
        self.ids.iter().copied().filter(|&id| id != FOREGROUND_ID).max()
    }
}
