//! Tetris tessellations of a `w`-wide well: the disassembly automaton, its
//! grammar, composition-controlled sampling of full boards, and extraction
//! of playable piece sequences.

mod automaton;
mod board;
mod model;
mod svg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::ExactError;
use crate::sampler::SamplerError;
use crate::tuner::TunerError;

pub use automaton::{build_automaton, minimize, to_grammar, Automaton, Boundary, Transition};
pub use board::{disassemble, extract_instance, InstanceSequence, Placement, PlacedPiece, Tessellation};
pub use model::{piece_frequencies, sample_tessellation, tessellation_count, TessellationSample, TetrisModel};
pub use svg::render_svg;

pub const MIN_WIDTH: usize = 2;
pub const MAX_WIDTH: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TetrisError {
    #[error("width {0} is outside 2..=9")]
    WidthOutOfRange(usize),
    #[error("{pieces} pieces do not tile a {width}-wide rectangle")]
    AreaMismatch { width: usize, pieces: usize },
    #[error("piece dependency graph has a cycle through piece {0}")]
    CycleDetected(usize),
    #[error("invalid tessellation: {0}")]
    InvalidTessellation(String),
    #[error("word does not match the automaton: {0}")]
    Replay(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Tuner(#[from] TunerError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

impl TetrisError {
    pub fn code(&self) -> &'static str {
        match self {
            TetrisError::WidthOutOfRange(_) => "width_out_of_range",
            TetrisError::AreaMismatch { .. } => "area_mismatch",
            TetrisError::CycleDetected(_) => "cycle_detected",
            TetrisError::InvalidTessellation(_) => "invalid_tessellation",
            TetrisError::Replay(_) => "replay_mismatch",
            TetrisError::Exact(e) => e.code(),
            TetrisError::Tuner(e) => e.code(),
            TetrisError::Sampler(e) => e.code(),
        }
    }
}

/// Tetromino kinds, in letter order of the tessellation grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Z,
    O,
    L,
    J,
    I,
    S,
    T,
}

impl Kind {
    pub const ALL: [Kind; 7] = [Kind::Z, Kind::O, Kind::L, Kind::J, Kind::I, Kind::S, Kind::T];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Kind> {
        Kind::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        ["Z", "O", "L", "J", "I", "S", "T"][self as usize]
    }

    /// Cells of the first orientation, `(x, y)` with `y` pointing up.
    fn base(self) -> [(i8, i8); 4] {
        match self {
            Kind::I => [(0, 0), (1, 0), (2, 0), (3, 0)],
            Kind::O => [(0, 0), (1, 0), (0, 1), (1, 1)],
            Kind::T => [(0, 0), (1, 0), (2, 0), (1, 1)],
            Kind::S => [(0, 0), (1, 0), (1, 1), (2, 1)],
            Kind::Z => [(1, 0), (2, 0), (0, 1), (1, 1)],
            Kind::L => [(0, 0), (1, 0), (2, 0), (2, 1)],
            Kind::J => [(0, 0), (1, 0), (2, 0), (0, 1)],
        }
    }
}

/// A fixed tetromino: a kind in one of its distinct orientations. Cells
/// are sorted and translated so the minimum coordinates are 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Piece {
    pub kind: Kind,
    pub rotation: u8,
    pub cells: [(i8, i8); 4],
}

impl Piece {
    /// Top-most cell, rightmost among ties.
    pub fn anchor(&self) -> (i8, i8) {
        *self.cells.iter().max_by_key(|&&(x, y)| (y, x)).unwrap()
    }
}

fn normalized(mut c: [(i8, i8); 4]) -> [(i8, i8); 4] {
    let mx = c.iter().map(|p| p.0).min().unwrap();
    let my = c.iter().map(|p| p.1).min().unwrap();
    for p in c.iter_mut() {
        *p = (p.0 - mx, p.1 - my);
    }
    c.sort_unstable();
    c
}

/// The 19 fixed tetrominoes, by kind then rotation (quarter turns
/// counter-clockwise, duplicates dropped).
pub fn pieces() -> Vec<Piece> {
    let mut out = Vec::with_capacity(19);
    for kind in Kind::ALL {
        let mut seen: Vec<[(i8, i8); 4]> = Vec::new();
        let mut cur = kind.base();
        for _ in 0..4 {
            let n = normalized(cur);
            if !seen.contains(&n) {
                out.push(Piece {
                    kind,
                    rotation: seen.len() as u8,
                    cells: n,
                });
                seen.push(n);
            }
            for p in cur.iter_mut() {
                *p = (-p.1, p.0);
            }
        }
    }
    out
}
